#include "tsmbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tsmbo/io.hpp"

namespace tsmbo {

namespace fs = std::filesystem;
using nlohmann::json;

StrategySpec StrategySpec::random_search() {
  StrategySpec s;
  s.kind = Kind::RandomSearch;
  return s;
}

StrategySpec StrategySpec::ea_strategy(std::size_t mu, std::size_t lambda) {
  StrategySpec s;
  s.kind = Kind::Ea;
  s.ea.mu = mu;
  s.ea.lambda = lambda;
  return s;
}

StrategySpec StrategySpec::smbo_strategy(KernelConfig kernel) {
  StrategySpec s;
  s.kind = Kind::Smbo;
  s.kernel = kernel;
  return s;
}

std::string StrategySpec::canonical_label() const {
  if (!label.empty()) return label;
  switch (kind) {
    case Kind::RandomSearch:
      return "rs";
    case Kind::Ea:
      return "ea_mu" + std::to_string(ea.mu) + "_lambda" + std::to_string(ea.lambda);
    case Kind::Smbo: {
      if (kernel.use_shd2 && kernel.use_phd && kernel.use_ted) return "smbo";
      std::string out = "smbo";
      if (kernel.use_shd2) out += "_shd2";
      if (kernel.use_phd) out += "_phd";
      if (kernel.use_ted) out += "_ted";
      return out;
    }
  }
  return "unknown";
}

namespace {

json strategy_to_json(const StrategySpec& s) {
  json j;
  switch (s.kind) {
    case StrategySpec::Kind::RandomSearch:
      j["type"] = "rs";
      break;
    case StrategySpec::Kind::Ea:
      j["type"] = "ea";
      j["mu"] = s.ea.mu;
      j["lambda"] = s.ea.lambda;
      break;
    case StrategySpec::Kind::Smbo: {
      j["type"] = "smbo";
      json d = json::array();
      if (s.kernel.use_shd2) d.push_back("shd2");
      if (s.kernel.use_phd) d.push_back("phd");
      if (s.kernel.use_ted) d.push_back("ted");
      j["distances"] = d;
      j["inner_mu"] = s.inner_mu;
      j["inner_lambda"] = s.inner_lambda;
      break;
    }
  }
  if (!s.label.empty()) j["label"] = s.label;
  return j;
}

StrategySpec strategy_from_json(const json& j) {
  StrategySpec s;
  const std::string type = j.at("type").get<std::string>();
  if (type == "rs") {
    s.kind = StrategySpec::Kind::RandomSearch;
  } else if (type == "ea") {
    s.kind = StrategySpec::Kind::Ea;
    if (j.contains("mu")) s.ea.mu = j.at("mu").get<std::size_t>();
    if (j.contains("lambda")) s.ea.lambda = j.at("lambda").get<std::size_t>();
  } else if (type == "smbo") {
    s.kind = StrategySpec::Kind::Smbo;
    if (j.contains("distances")) {
      s.kernel = KernelConfig{false, false, false};
      for (const auto& d : j.at("distances")) {
        const std::string name = d.get<std::string>();
        if (name == "shd2") {
          s.kernel.use_shd2 = true;
        } else if (name == "phd") {
          s.kernel.use_phd = true;
        } else if (name == "ted") {
          s.kernel.use_ted = true;
        } else {
          throw std::invalid_argument("unknown distance: " + name);
        }
      }
    }
    if (j.contains("inner_mu")) s.inner_mu = j.at("inner_mu").get<std::size_t>();
    if (j.contains("inner_lambda")) s.inner_lambda = j.at("inner_lambda").get<std::size_t>();
  } else {
    throw std::invalid_argument("unknown strategy type: " + type);
  }
  if (j.contains("label")) s.label = j.at("label").get<std::string>();
  return s;
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json j;
  json probs = json::array();
  for (const auto& p : problems) probs.push_back(json::parse(p.to_json()));
  j["problems"] = probs;
  json strats = json::array();
  for (const auto& s : strategies) strats.push_back(strategy_to_json(s));
  j["strategies"] = strats;
  j["repetitions"] = repetitions;
  j["master_seed"] = master_seed;
  j["budget"] = {{"total", budget.total},
                 {"initial_design", budget.initial_design},
                 {"ei_evaluations", budget.ei_evaluations}};
  j["generator"] = {{"max_depth", generator.max_depth},
                    {"constant_probability", generator.constant_probability}};
  j["mutation"] = {{"p_insert_subtree", mutation.p_insert_subtree},
                   {"p_delete_subtree", mutation.p_delete_subtree},
                   {"p_subtree_vs_leaf", mutation.p_subtree_vs_leaf},
                   {"constant_probability", mutation.constant_probability},
                   {"max_depth", mutation.max_depth}};
  j["out_dir"] = out_dir;
  j["workers"] = workers;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  for (const auto& p : j.at("problems")) {
    if (p.is_string()) {
      cfg.problems.push_back(ProblemSpec::builtin(p.get<std::string>()));
    } else {
      cfg.problems.push_back(ProblemSpec::from_json(p.dump()));
    }
  }
  for (const auto& s : j.at("strategies")) cfg.strategies.push_back(strategy_from_json(s));
  if (j.contains("repetitions")) cfg.repetitions = j.at("repetitions").get<std::size_t>();
  if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    if (b.contains("total")) cfg.budget.total = b.at("total").get<std::size_t>();
    if (b.contains("initial_design")) {
      cfg.budget.initial_design = b.at("initial_design").get<std::size_t>();
    }
    if (b.contains("ei_evaluations")) {
      cfg.budget.ei_evaluations = b.at("ei_evaluations").get<std::size_t>();
    }
  }
  if (j.contains("generator")) {
    const auto& g = j.at("generator");
    if (g.contains("max_depth")) cfg.generator.max_depth = g.at("max_depth").get<int>();
    if (g.contains("constant_probability")) {
      cfg.generator.constant_probability = g.at("constant_probability").get<double>();
    }
  }
  if (j.contains("mutation")) {
    const auto& m = j.at("mutation");
    if (m.contains("p_insert_subtree")) {
      cfg.mutation.p_insert_subtree = m.at("p_insert_subtree").get<double>();
    }
    if (m.contains("p_delete_subtree")) {
      cfg.mutation.p_delete_subtree = m.at("p_delete_subtree").get<double>();
    }
    if (m.contains("p_subtree_vs_leaf")) {
      cfg.mutation.p_subtree_vs_leaf = m.at("p_subtree_vs_leaf").get<double>();
    }
    if (m.contains("constant_probability")) {
      cfg.mutation.constant_probability = m.at("constant_probability").get<double>();
    }
    if (m.contains("max_depth")) cfg.mutation.max_depth = m.at("max_depth").get<int>();
  }
  if (j.contains("repetitions") && cfg.repetitions < 1) {
    throw std::invalid_argument("repetitions must be >= 1");
  }
  if (cfg.strategies.empty()) throw std::invalid_argument("no strategies configured");
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("workers")) cfg.workers = j.at("workers").get<std::size_t>();
  return cfg;
}

namespace {

RunRecord dispatch_strategy(const StrategySpec& s, UpperProblem& problem,
                            const ExperimentConfig& cfg, Rng& rng) {
  switch (s.kind) {
    case StrategySpec::Kind::RandomSearch:
      return random_search(problem, cfg.budget.total, rng, cfg.generator);
    case StrategySpec::Kind::Ea: {
      EAParams params = s.ea;
      params.generator = cfg.generator;
      params.mutation = cfg.mutation;
      return ea_optimize(problem, params, cfg.budget.total, rng);
    }
    case StrategySpec::Kind::Smbo: {
      SmboConfig smbo_cfg;
      smbo_cfg.budget = cfg.budget;
      smbo_cfg.kernel = s.kernel;
      smbo_cfg.inner_mu = s.inner_mu;
      smbo_cfg.inner_lambda = s.inner_lambda;
      smbo_cfg.generator = cfg.generator;
      smbo_cfg.mutation = cfg.mutation;
      RunRecord r = smbo(problem, smbo_cfg, rng, s.canonical_label());
      return r;
    }
  }
  throw std::logic_error("unreachable strategy kind");
}

void parallel_for(std::size_t tasks, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, tasks);
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks) return;
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

std::string run_file_stem(const std::string& problem, const std::string& strategy,
                          std::size_t rep) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", rep);
  return problem + "__" + strategy + "__rep" + buf;
}

}  // namespace

std::vector<std::size_t> summary_checkpoints(std::size_t budget) {
  std::vector<std::size_t> cps;
  cps.push_back(std::min<std::size_t>(50, budget));
  if (budget != cps.front()) cps.push_back(budget);
  return cps;
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs,
                                  const std::vector<std::size_t>& checkpoints) {
  std::map<std::pair<std::string, std::string>, std::vector<const RunResult*>> groups;
  for (const auto& r : runs) {
    if (r.failed) continue;
    groups[{r.problem, r.strategy}].push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : groups) {
    for (std::size_t cp : checkpoints) {
      std::vector<double> best;
      best.reserve(members.size());
      for (const RunResult* r : members) best.push_back(r->record.best_after(cp));
      SummaryRow row;
      row.problem = key.first;
      row.strategy = key.second;
      row.checkpoint = cp;
      row.runs = best.size();
      row.median = quantile(best, 0.5);
      row.q1 = quantile(best, 0.25);
      row.q3 = quantile(best, 0.75);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<TrajectoryRow> weight_trajectories(const std::vector<RunResult>& runs) {
  // (problem, strategy) -> iteration -> weight sums and count
  struct Acc {
    double phd = 0.0;
    double ted = 0.0;
    double shd2 = 0.0;
    std::size_t n = 0;
  };
  std::map<std::pair<std::string, std::string>, std::map<std::size_t, Acc>> groups;
  for (const auto& r : runs) {
    if (r.failed || r.record.weights.empty()) continue;
    auto& per_iter = groups[{r.problem, r.strategy}];
    for (const auto& w : r.record.weights) {
      Acc& acc = per_iter[w.iteration];
      acc.phd += w.w_phd;
      acc.ted += w.w_ted;
      acc.shd2 += w.w_shd2;
      ++acc.n;
    }
  }
  std::vector<TrajectoryRow> rows;
  for (const auto& [key, per_iter] : groups) {
    for (const auto& [iter, acc] : per_iter) {
      TrajectoryRow row;
      row.problem = key.first;
      row.strategy = key.second;
      row.iteration = iter;
      row.mean_w_phd = acc.phd / static_cast<double>(acc.n);
      row.mean_w_ted = acc.ted / static_cast<double>(acc.n);
      row.mean_w_shd2 = acc.shd2 / static_cast<double>(acc.n);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "problem,strategy,checkpoint,runs,median,q1,q3\n";
  for (const auto& r : rows) {
    out += r.problem + ',' + r.strategy + ',' + std::to_string(r.checkpoint) + ',' +
           std::to_string(r.runs) + ',' + fmt_sig9(r.median) + ',' + fmt_sig9(r.q1) + ',' +
           fmt_sig9(r.q3) + '\n';
  }
  return out;
}

std::string boxplot_csv(const std::vector<RunResult>& runs,
                        const std::vector<std::size_t>& checkpoints) {
  // Long format, canonically ordered.
  std::vector<const RunResult*> ordered;
  for (const auto& r : runs) {
    if (!r.failed) ordered.push_back(&r);
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const RunResult* a, const RunResult* b) {
    if (a->problem != b->problem) return a->problem < b->problem;
    if (a->strategy != b->strategy) return a->strategy < b->strategy;
    return a->repetition < b->repetition;
  });
  std::string out = "problem,strategy,checkpoint,run,best_value\n";
  for (const RunResult* r : ordered) {
    for (std::size_t cp : checkpoints) {
      out += r->problem + ',' + r->strategy + ',' + std::to_string(cp) + ',' +
             std::to_string(r->repetition) + ',' + fmt_full(r->record.best_after(cp)) + '\n';
    }
  }
  return out;
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::string out = "problem,strategy,iteration,mean_w_phd,mean_w_ted,mean_w_shd2\n";
  for (const auto& r : rows) {
    out += r.problem + ',' + r.strategy + ',' + std::to_string(r.iteration) + ',' +
           fmt_sig9(r.mean_w_phd) + ',' + fmt_sig9(r.mean_w_ted) + ',' +
           fmt_sig9(r.mean_w_shd2) + '\n';
  }
  return out;
}

namespace {

// Minimal static SVG helpers; enough for boxplots and weight trajectories.
struct SvgCanvas {
  std::string body;
  double width = 640.0;
  double height = 400.0;

  void line(double x1, double y1, double x2, double y2, const char* color = "#444",
            double stroke = 1.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"%s\" stroke-width=\"%.2f\"/>\n",
                  x1, y1, x2, y2, color, stroke);
    body += buf;
  }
  void rect(double x, double y, double w, double h, const char* fill = "#9ecae1") {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                  "fill=\"%s\" stroke=\"#333\" stroke-width=\"1\"/>\n",
                  x, y, w, h, fill);
    body += buf;
  }
  void text(double x, double y, const std::string& s, double size = 11.0,
            const char* anchor = "middle") {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"%.1f\" "
                  "font-family=\"sans-serif\" text-anchor=\"%s\">%s</text>\n",
                  x, y, size, anchor, s.c_str());
    body += buf;
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color,
                const char* dash = nullptr) {
    std::string p = "<polyline fill=\"none\" stroke=\"";
    p += color;
    p += "\" stroke-width=\"1.5\"";
    if (dash) {
      p += " stroke-dasharray=\"";
      p += dash;
      p += "\"";
    }
    p += " points=\"";
    char buf[64];
    for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
      p += buf;
    }
    p += "\"/>\n";
    body += p;
  }
  std::string finish() const {
    char head[160];
    std::snprintf(head, sizeof(head),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                  "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                  width, height, width, height);
    return std::string(head) + body + "</svg>\n";
  }
};

constexpr double kMarginLeft = 50.0;
constexpr double kMarginRight = 15.0;
constexpr double kMarginTop = 20.0;
constexpr double kMarginBottom = 60.0;

std::string render_boxplot_svg(const std::string& problem,
                               const std::vector<const RunResult*>& runs,
                               const std::vector<std::size_t>& checkpoints) {
  std::vector<std::string> strategies;
  for (const RunResult* r : runs) {
    if (std::find(strategies.begin(), strategies.end(), r->strategy) == strategies.end()) {
      strategies.push_back(r->strategy);
    }
  }
  std::sort(strategies.begin(), strategies.end());

  SvgCanvas svg;
  const double plot_w = svg.width - kMarginLeft - kMarginRight;
  const double plot_h = svg.height - kMarginTop - kMarginBottom;
  const auto y_of = [&](double v) { return kMarginTop + (1.0 - v) * plot_h; };

  svg.line(kMarginLeft, kMarginTop, kMarginLeft, kMarginTop + plot_h);
  svg.line(kMarginLeft, kMarginTop + plot_h, kMarginLeft + plot_w, kMarginTop + plot_h);
  for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    svg.line(kMarginLeft - 4, y_of(tick), kMarginLeft, y_of(tick));
    svg.text(kMarginLeft - 8, y_of(tick) + 4, fmt_sig9(tick), 10, "end");
  }
  svg.text(kMarginLeft + plot_w / 2, kMarginTop - 6, problem + ": best F by strategy");

  const std::size_t slots = strategies.size() * checkpoints.size();
  const double slot_w = plot_w / static_cast<double>(std::max<std::size_t>(slots, 1));
  std::size_t slot = 0;
  for (const auto& strategy : strategies) {
    for (std::size_t cp : checkpoints) {
      std::vector<double> values;
      for (const RunResult* r : runs) {
        if (r->strategy == strategy) values.push_back(r->record.best_after(cp));
      }
      const double cx = kMarginLeft + (static_cast<double>(slot) + 0.5) * slot_w;
      ++slot;
      if (values.empty()) continue;
      const double lo = *std::min_element(values.begin(), values.end());
      const double hi = *std::max_element(values.begin(), values.end());
      const double q1 = quantile(values, 0.25);
      const double q2 = quantile(values, 0.5);
      const double q3 = quantile(values, 0.75);
      const double half = std::min(slot_w * 0.3, 18.0);
      svg.line(cx, y_of(lo), cx, y_of(hi));
      svg.rect(cx - half, y_of(q3), 2 * half, std::max(y_of(q1) - y_of(q3), 0.5));
      svg.line(cx - half, y_of(q2), cx + half, y_of(q2), "#000", 1.5);
      svg.text(cx, kMarginTop + plot_h + 14, "@" + std::to_string(cp), 9);
      if (cp == checkpoints.front()) {
        svg.text(cx + slot_w / 2, kMarginTop + plot_h + 30, strategy, 10);
      }
    }
  }
  return svg.finish();
}

std::string render_weights_svg(const std::string& problem, const std::string& strategy,
                               const std::vector<TrajectoryRow>& rows) {
  SvgCanvas svg;
  const double plot_w = svg.width - kMarginLeft - kMarginRight;
  const double plot_h = svg.height - kMarginTop - kMarginBottom;
  const auto y_of = [&](double v) { return kMarginTop + (1.0 - v) * plot_h; };

  std::size_t max_iter = 1;
  for (const auto& r : rows) max_iter = std::max(max_iter, r.iteration);
  const auto x_of = [&](std::size_t it) {
    return kMarginLeft +
           plot_w * (static_cast<double>(it) - 1.0) /
               std::max(static_cast<double>(max_iter) - 1.0, 1.0);
  };

  svg.line(kMarginLeft, kMarginTop, kMarginLeft, kMarginTop + plot_h);
  svg.line(kMarginLeft, kMarginTop + plot_h, kMarginLeft + plot_w, kMarginTop + plot_h);
  for (double tick : {0.0, 0.5, 1.0}) {
    svg.line(kMarginLeft - 4, y_of(tick), kMarginLeft, y_of(tick));
    svg.text(kMarginLeft - 8, y_of(tick) + 4, fmt_sig9(tick), 10, "end");
  }
  svg.text(kMarginLeft + plot_w / 2, kMarginTop - 6,
           problem + " / " + strategy + ": mean normalized weights");

  std::vector<std::pair<double, double>> phd_pts;
  std::vector<std::pair<double, double>> ted_pts;
  std::vector<std::pair<double, double>> shd2_pts;
  for (const auto& r : rows) {
    phd_pts.emplace_back(x_of(r.iteration), y_of(r.mean_w_phd));
    ted_pts.emplace_back(x_of(r.iteration), y_of(r.mean_w_ted));
    shd2_pts.emplace_back(x_of(r.iteration), y_of(r.mean_w_shd2));
  }
  svg.polyline(phd_pts, "#d95f02");
  svg.polyline(ted_pts, "#1b9e77", "6,3");
  svg.polyline(shd2_pts, "#7570b3", "2,3");
  svg.text(kMarginLeft + 10, kMarginTop + plot_h + 30, "phd (solid), ted (dashed), shd2 (dotted)",
           10, "start");
  svg.text(kMarginLeft + plot_w / 2, kMarginTop + plot_h + 14, "iteration", 10);
  return svg.finish();
}

}  // namespace

void emit_plots(const StudyResult& study, const std::string& dir) {
  if (study.runs.empty()) throw std::invalid_argument("emit_plots: empty study");
  fs::create_directories(dir);
  write_file(dir + "/boxplot.csv", boxplot_csv(study.runs, study.checkpoints));
  write_file(dir + "/weight_trajectory.csv", trajectory_csv(study.trajectory));

  std::set<std::string> problems;
  for (const auto& r : study.runs) {
    if (!r.failed) problems.insert(r.problem);
  }
  for (const auto& problem : problems) {
    std::vector<const RunResult*> members;
    for (const auto& r : study.runs) {
      if (!r.failed && r.problem == problem) members.push_back(&r);
    }
    write_file(dir + "/boxplot_" + problem + ".svg",
               render_boxplot_svg(problem, members, study.checkpoints));
  }

  std::set<std::pair<std::string, std::string>> weight_groups;
  for (const auto& r : study.trajectory) weight_groups.insert({r.problem, r.strategy});
  for (const auto& [problem, strategy] : weight_groups) {
    std::vector<TrajectoryRow> rows;
    for (const auto& r : study.trajectory) {
      if (r.problem == problem && r.strategy == strategy) rows.push_back(r);
    }
    write_file(dir + "/weights_" + problem + "__" + strategy + ".svg",
               render_weights_svg(problem, strategy, rows));
  }
}

StudyResult run_experiment(const ExperimentConfig& config) {
  if (config.problems.empty()) throw std::invalid_argument("no problems configured");
  if (config.strategies.empty()) throw std::invalid_argument("no strategies configured");
  if (config.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

  struct Task {
    const ProblemSpec* problem;
    const StrategySpec* strategy;
    std::size_t repetition;
  };
  std::vector<Task> tasks;
  for (const auto& p : config.problems) {
    for (const auto& s : config.strategies) {
      for (std::size_t r = 0; r < config.repetitions; ++r) {
        tasks.push_back({&p, &s, r});
      }
    }
  }

  StudyResult study;
  study.checkpoints = summary_checkpoints(config.budget.total);
  study.runs.resize(tasks.size());

  parallel_for(tasks.size(), config.workers, [&](std::size_t i) {
    const Task& t = tasks[i];
    RunResult result;
    result.problem = t.problem->name;
    result.strategy = t.strategy->canonical_label();
    result.repetition = t.repetition;
    try {
      UpperProblem problem(*t.problem);
      Rng rng(derive_seed(config.master_seed, result.problem, result.strategy,
                          t.repetition));
      result.record = dispatch_strategy(*t.strategy, problem, config, rng);
    } catch (const std::exception& e) {
      result.failed = true;
      result.error = e.what();
    }
    study.runs[i] = std::move(result);
  });

  study.summary = summarize(study.runs, study.checkpoints);
  study.trajectory = weight_trajectories(study.runs);

  fs::create_directories(config.out_dir);
  fs::create_directories(config.out_dir + "/runs");
  write_file(config.out_dir + "/config.json", config.to_json() + "\n");
  for (const auto& r : study.runs) {
    if (r.failed) continue;
    const std::string stem =
        config.out_dir + "/runs/" + run_file_stem(r.problem, r.strategy, r.repetition);
    write_file(stem + ".csv", run_record_csv(r.record));
    if (!r.record.weights.empty()) {
      write_file(stem + "_weights.csv", weight_log_csv(r.record));
    }
  }
  std::string failures;
  for (const auto& r : study.runs) {
    if (r.failed) {
      failures += r.problem + ',' + r.strategy + ',' + std::to_string(r.repetition) + ',' +
                  r.error + '\n';
    }
  }
  if (!failures.empty()) {
    write_file(config.out_dir + "/failures.csv", "problem,strategy,rep,error\n" + failures);
  }
  write_file(config.out_dir + "/summary.csv", summary_csv(study.summary));
  emit_plots(study, config.out_dir);
  return study;
}

StudyResult load_study(const std::string& dir) {
  const fs::path runs_dir = fs::path(dir) / "runs";
  if (!fs::is_directory(runs_dir)) {
    throw std::runtime_error("no runs directory under " + dir);
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > 4 && name.ends_with(".csv") && !name.ends_with("_weights.csv")) {
      files.push_back(name);
    }
  }
  std::sort(files.begin(), files.end());

  StudyResult study;
  std::size_t max_index = 0;
  for (const std::string& name : files) {
    RunResult result;
    const std::string stem = name.substr(0, name.size() - 4);
    const std::size_t sep1 = stem.find("__");
    const std::size_t sep2 = stem.rfind("__rep");
    if (sep1 == std::string::npos || sep2 == std::string::npos || sep2 <= sep1) continue;
    result.problem = stem.substr(0, sep1);
    result.strategy = stem.substr(sep1 + 2, sep2 - sep1 - 2);
    result.repetition = static_cast<std::size_t>(std::stoul(stem.substr(sep2 + 5)));

    std::istringstream in(read_file((runs_dir / name).string()));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 5) continue;
      EvalLogEntry e;
      e.index = static_cast<std::size_t>(std::stoul(fields[0]));
      e.sexpr = fields[2];
      e.fitness = std::strtod(fields[3].c_str(), nullptr);
      e.best_so_far = std::strtod(fields[4].c_str(), nullptr);
      result.record.evaluations.push_back(std::move(e));
      max_index = std::max(max_index, result.record.evaluations.back().index);
    }
    result.record.strategy = result.strategy;
    if (!result.record.evaluations.empty()) {
      result.record.best_fitness = result.record.evaluations.back().best_so_far;
    }

    const fs::path wfile = runs_dir / (stem + "_weights.csv");
    if (fs::exists(wfile)) {
      std::istringstream win(read_file(wfile.string()));
      std::getline(win, line);  // header
      while (std::getline(win, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) continue;
        WeightLogEntry w;
        w.iteration = static_cast<std::size_t>(std::stoul(fields[0]));
        w.w_phd = std::strtod(fields[1].c_str(), nullptr);
        w.w_ted = std::strtod(fields[2].c_str(), nullptr);
        w.w_shd2 = std::strtod(fields[3].c_str(), nullptr);
        result.record.weights.push_back(w);
      }
    }
    study.runs.push_back(std::move(result));
  }

  study.checkpoints = summary_checkpoints(max_index);
  study.summary = summarize(study.runs, study.checkpoints);
  study.trajectory = weight_trajectories(study.runs);
  return study;
}

DistanceStudyResult distance_study(std::size_t n_trees, const GeneratorParams& generator,
                                   const ProblemSpec& problem, std::uint64_t seed) {
  if (n_trees < 3) throw std::invalid_argument("distance study needs >= 3 trees");
  const Dataset data = make_dataset(problem);
  const OperatorSet ops = problem.operator_set();
  Rng rng(seed);

  DistanceStudyResult study;
  study.trees.reserve(n_trees);
  for (std::size_t i = 0; i < n_trees; ++i) {
    study.trees.push_back(ramped_half_and_half(ops, generator, rng));
  }
  std::stable_sort(study.trees.begin(), study.trees.end(),
                   [](const ExprTree& a, const ExprTree& b) {
                     const int da = depth(a);
                     const int db = depth(b);
                     if (da != db) return da < db;
                     return a.node_count() < b.node_count();
                   });

  const DistanceMeasure measures[4] = {DistanceMeasure::Phd, DistanceMeasure::Ted,
                                       DistanceMeasure::Shd1, DistanceMeasure::Shd2};
  for (DistanceMeasure m : measures) {
    study.matrices.push_back(distance_matrix(study.trees, m, data.X));
  }

  const auto lower_triangle = [](const DistanceMatrix& m) {
    std::vector<double> out;
    out.reserve(m.n * (m.n - 1) / 2);
    for (std::size_t i = 1; i < m.n; ++i) {
      for (std::size_t j = 0; j < i; ++j) out.push_back(m(i, j));
    }
    return out;
  };
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      DistanceStudyResult::Correlation c;
      c.a = measures[a];
      c.b = measures[b];
      const auto r =
          pearson(lower_triangle(study.matrices[a]), lower_triangle(study.matrices[b]));
      c.r = r.value_or(std::numeric_limits<double>::quiet_NaN());
      study.correlations.push_back(c);
    }
  }
  return study;
}

std::optional<double> DistanceStudyResult::correlation(DistanceMeasure a,
                                                       DistanceMeasure b) const {
  for (const auto& c : correlations) {
    if ((c.a == a && c.b == b) || (c.a == b && c.b == a)) return c.r;
  }
  return std::nullopt;
}

void write_distance_study(const DistanceStudyResult& study, const std::string& dir) {
  fs::create_directories(dir);
  for (const auto& m : study.matrices) {
    write_file(dir + "/distance_" + measure_name(m.measure) + ".csv",
               distance_matrix_csv(m, study.trees));
  }
  std::string corr = "measure_a,measure_b,pearson\n";
  for (const auto& c : study.correlations) {
    corr += std::string(measure_name(c.a)) + ',' + measure_name(c.b) + ',' + fmt_sig9(c.r) +
            '\n';
  }
  write_file(dir + "/correlations.csv", corr);
  std::string trees;
  for (const auto& t : study.trees) {
    trees += format_sexpr(t);
    trees += '\n';
  }
  write_file(dir + "/trees.txt", trees);
}

TuningResult tuning_grid(const std::vector<ProblemSpec>& problems,
                         const std::vector<std::size_t>& mu_values,
                         const std::vector<std::size_t>& lambda_values,
                         std::size_t repetitions, std::size_t budget,
                         std::uint64_t master_seed, std::size_t workers) {
  if (problems.empty() || mu_values.empty() || lambda_values.empty() || repetitions < 1) {
    throw std::invalid_argument("tuning grid needs problems, grid values and repetitions");
  }

  TuningResult result;
  for (const auto& p : problems) result.problems.push_back(p.name);
  for (std::size_t mu : mu_values) {
    for (std::size_t lambda : lambda_values) {
      TuningCell cell;
      cell.mu = mu;
      cell.lambda = lambda;
      cell.mean_best.assign(problems.size(), 0.0);
      cell.rank.assign(problems.size(), 0.0);
      result.cells.push_back(std::move(cell));
    }
  }

  struct Task {
    std::size_t cell;
    std::size_t problem;
    std::size_t repetition;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    for (std::size_t p = 0; p < problems.size(); ++p) {
      for (std::size_t r = 0; r < repetitions; ++r) tasks.push_back({c, p, r});
    }
  }
  std::vector<double> final_best(tasks.size(), 1.0);

  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const Task& t = tasks[i];
    const TuningCell& cell = result.cells[t.cell];
    EAParams params;
    params.mu = cell.mu;
    params.lambda = cell.lambda;
    const std::string label =
        "ea_mu" + std::to_string(cell.mu) + "_lambda" + std::to_string(cell.lambda);
    UpperProblem problem(problems[t.problem]);
    Rng rng(derive_seed(master_seed, problems[t.problem].name, label, t.repetition));
    const RunRecord record = ea_optimize(problem, params, budget, rng);
    final_best[i] = record.best_fitness;
  });

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    result.cells[tasks[i].cell].mean_best[tasks[i].problem] +=
        final_best[i] / static_cast<double>(repetitions);
  }

  // Per-problem mid-ranks of the cell means, then the grand mean rank.
  for (std::size_t p = 0; p < problems.size(); ++p) {
    std::vector<double> column;
    column.reserve(result.cells.size());
    for (const auto& cell : result.cells) column.push_back(cell.mean_best[p]);
    const std::vector<double> ranks = mid_ranks(column);
    for (std::size_t c = 0; c < result.cells.size(); ++c) result.cells[c].rank[p] = ranks[c];
  }
  for (auto& cell : result.cells) {
    cell.mean_rank = mean(cell.rank);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < result.cells.size(); ++c) {
    if (result.cells[c].mean_rank < result.cells[best].mean_rank) best = c;
  }
  result.best_cell = best;
  return result;
}

std::string tuning_csv(const TuningResult& result) {
  std::string out = "mu,lambda,mean_rank";
  for (const auto& p : result.problems) out += ",mean_best_" + p + ",rank_" + p;
  out += '\n';
  for (const auto& cell : result.cells) {
    out += std::to_string(cell.mu) + ',' + std::to_string(cell.lambda) + ',' +
           fmt_sig9(cell.mean_rank);
    for (std::size_t p = 0; p < result.problems.size(); ++p) {
      out += ',' + fmt_sig9(cell.mean_best[p]) + ',' + fmt_sig9(cell.rank[p]);
    }
    out += '\n';
  }
  return out;
}

std::string kruskal_wallis_report(const std::string& boxplot_csv_text,
                                  const std::string& group_column) {
  std::istringstream in(boxplot_csv_text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
  const auto header = split_csv_line(line);
  const auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("missing CSV column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t col_problem = column("problem");
  const std::size_t col_checkpoint = column("checkpoint");
  const std::size_t col_group = column(group_column);
  const std::size_t col_value = column("best_value");

  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>>
      cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) continue;
    cells[{fields[col_problem], fields[col_checkpoint]}][fields[col_group]].push_back(
        std::strtod(fields[col_value].c_str(), nullptr));
  }

  std::string out = "problem,checkpoint,groups,H,df,p_value\n";
  for (const auto& [key, groups] : cells) {
    if (groups.size() < 2) continue;
    std::vector<std::vector<double>> samples;
    samples.reserve(groups.size());
    for (const auto& [name, values] : groups) samples.push_back(values);
    const KruskalWallisResult kw = kruskal_wallis(samples);
    out += key.first + ',' + key.second + ',' + std::to_string(groups.size()) + ',' +
           fmt_sig9(kw.h) + ',' + std::to_string(kw.dof) + ',' + fmt_sig9(kw.p_value) + '\n';
  }
  return out;
}

}  // namespace tsmbo
