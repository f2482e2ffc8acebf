#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tsmbo {

// Shortest text form that parses back to the identical double; raw data files
// use this so downstream recomputation is exact.
std::string fmt_full(double x);

// 9 significant digits for human-facing reports and console output.
std::string fmt_sig9(double x);

std::vector<std::string> split_csv_line(const std::string& line);

// Minimal well-formedness check for the emitted SVG/XML: tags balance and
// nest properly. Good enough to validate our own output.
bool xml_well_formed(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace tsmbo
