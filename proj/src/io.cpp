#include "tsmbo/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tsmbo {

std::string fmt_full(double x) {
  char buf[40];
  // Shortest representation that parses back exactly.
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) return buf;
  }
  return buf;
}

std::string fmt_sig9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

bool xml_well_formed(std::string_view text) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  bool seen_element = false;
  while (i < text.size()) {
    if (text[i] != '<') {
      ++i;
      continue;
    }
    const std::size_t close = text.find('>', i);
    if (close == std::string_view::npos) return false;
    std::string_view tag = text.substr(i + 1, close - i - 1);
    i = close + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;  // declaration or comment
    if (tag.back() == '/') {
      seen_element = true;
      continue;  // self-closing
    }
    if (tag[0] == '/') {
      std::string name(tag.substr(1));
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
      continue;
    }
    const std::size_t space = tag.find_first_of(" \t\n");
    std::string name(space == std::string_view::npos ? tag : tag.substr(0, space));
    if (name.empty()) return false;
    stack.push_back(std::move(name));
    seen_element = true;
  }
  return stack.empty() && seen_element;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace tsmbo
