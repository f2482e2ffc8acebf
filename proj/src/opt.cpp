#include "tsmbo/opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tsmbo {

namespace {

constexpr double kHuge = 1e300;
constexpr double kPotentiallyOptimalEps = 1e-4;

double sanitize(double v) { return std::isfinite(v) ? v : kHuge; }

void check_bounds(const BoxBounds& bounds) {
  if (bounds.lower.size() != bounds.upper.size() || bounds.lower.empty()) {
    throw std::invalid_argument("inconsistent box bounds");
  }
  for (std::size_t i = 0; i < bounds.lower.size(); ++i) {
    if (!(bounds.lower[i] < bounds.upper[i])) {
      throw std::invalid_argument("box bounds must satisfy lower < upper");
    }
  }
}

}  // namespace

bool BoxBounds::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  }
  return true;
}

namespace {

struct Rect {
  std::vector<double> center;  // normalized to [0,1]^d
  std::vector<int> levels;     // side in dim i is 3^-levels[i]
  double value = 0.0;
  int min_level = 0;  // longest side is 3^-min_level
  std::size_t id = 0;
};

class DirectState {
 public:
  DirectState(const Objective& f, const BoxBounds& bounds, std::size_t max_evals)
      : f_(f), bounds_(bounds), max_evals_(max_evals), dim_(bounds.dim()) {}

  OptResult run() {
    Rect first;
    first.center.assign(dim_, 0.5);
    first.levels.assign(dim_, 0);
    first.min_level = 0;
    first.id = next_id_++;
    first.value = evaluate(first.center);
    rects_.push_back(std::move(first));

    while (evals_ < max_evals_) {
      const std::vector<std::size_t> selected = potentially_optimal();
      for (std::size_t idx : selected) {
        if (evals_ >= max_evals_) break;
        split(idx);
      }
    }

    return {best_point_, best_value_, evals_};
  }

 private:
  double evaluate(const std::vector<double>& center) {
    std::vector<double> x(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      x[i] = bounds_.lower[i] + center[i] * (bounds_.upper[i] - bounds_.lower[i]);
    }
    const double v = sanitize(f_(x));
    ++evals_;
    if (v < best_value_) {
      best_value_ = v;
      best_point_ = x;
    }
    return v;
  }

  // One candidate per size group (the group's best rect), then the standard
  // lower-hull + epsilon filter over (size, value).
  std::vector<std::size_t> potentially_optimal() const {
    // level -> index of the group's best rect
    std::vector<std::pair<int, std::size_t>> groups;
    for (std::size_t i = 0; i < rects_.size(); ++i) {
      const Rect& r = rects_[i];
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const auto& g) { return g.first == r.min_level; });
      if (it == groups.end()) {
        groups.emplace_back(r.min_level, i);
      } else {
        const Rect& cur = rects_[it->second];
        if (r.value < cur.value || (r.value == cur.value && r.id < cur.id)) {
          it->second = i;
        }
      }
    }
    // Ascending size = descending level.
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    const std::size_t m = groups.size();
    std::vector<double> size(m);
    std::vector<double> value(m);
    for (std::size_t k = 0; k < m; ++k) {
      size[k] = std::pow(3.0, -groups[k].first);
      value[k] = rects_[groups[k].second].value;
    }

    std::vector<std::size_t> selected;
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      double k_lo = -inf;  // slopes to smaller rects
      for (std::size_t j = 0; j < k; ++j) {
        k_lo = std::max(k_lo, (value[k] - value[j]) / (size[k] - size[j]));
      }
      double k_hi = inf;  // slopes to larger rects
      for (std::size_t j = k + 1; j < m; ++j) {
        k_hi = std::min(k_hi, (value[j] - value[k]) / (size[j] - size[k]));
      }
      if (k_lo > k_hi) continue;
      if (best_value_ != 0.0) {
        const double gain = (best_value_ - value[k]) / std::abs(best_value_) +
                            size[k] * k_hi / std::abs(best_value_);
        if (!(gain >= kPotentiallyOptimalEps)) continue;
      } else if (!(value[k] <= size[k] * k_hi)) {
        continue;
      }
      selected.push_back(groups[k].second);
    }
    if (selected.empty() && !groups.empty()) {
      // Largest group as fallback; guarantees progress until the budget is
      // consumed even when the epsilon filter rejects everything.
      selected.push_back(groups.back().second);
    }
    // Split larger rectangles first.
    std::sort(selected.begin(), selected.end(), [&](std::size_t a, std::size_t b) {
      if (rects_[a].min_level != rects_[b].min_level) {
        return rects_[a].min_level < rects_[b].min_level;
      }
      return rects_[a].id < rects_[b].id;
    });
    return selected;
  }

  // Trisect along a single longest side (lowest dimension index on ties).
  void split(std::size_t idx) {
    const int lev = rects_[idx].min_level;
    std::size_t dim = 0;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (rects_[idx].levels[i] == lev) {
        dim = i;
        break;
      }
    }
    const double delta = std::pow(3.0, -(lev + 1));

    Rect left;
    left.center = rects_[idx].center;
    left.center[dim] -= delta;
    Rect right;
    right.center = rects_[idx].center;
    right.center[dim] += delta;

    rects_[idx].levels[dim] = lev + 1;
    rects_[idx].min_level =
        *std::min_element(rects_[idx].levels.begin(), rects_[idx].levels.end());
    left.levels = rects_[idx].levels;
    right.levels = rects_[idx].levels;
    left.min_level = rects_[idx].min_level;
    right.min_level = rects_[idx].min_level;

    left.id = next_id_++;
    left.value = evaluate(left.center);
    rects_.push_back(std::move(left));
    if (evals_ >= max_evals_) return;

    right.id = next_id_++;
    right.value = evaluate(right.center);
    rects_.push_back(std::move(right));
  }

  const Objective& f_;
  const BoxBounds& bounds_;
  std::size_t max_evals_;
  std::size_t dim_;
  std::vector<Rect> rects_;
  std::size_t evals_ = 0;
  std::size_t next_id_ = 0;
  double best_value_ = std::numeric_limits<double>::infinity();
  std::vector<double> best_point_;
};

}  // namespace

OptResult direct_minimize(const Objective& f, const BoxBounds& bounds,
                          std::size_t max_evals) {
  check_bounds(bounds);
  if (max_evals < 1) throw std::invalid_argument("max_evals must be >= 1");
  DirectState state(f, bounds, max_evals);
  return state.run();
}

namespace {

constexpr double kReflection = 1.0;
constexpr double kExpansion = 2.0;
constexpr double kContraction = 0.5;
constexpr double kShrink = 0.5;
constexpr double kDiameterTol = 1e-10;
constexpr double kInitialStepFraction = 0.05;

}  // namespace

OptResult nelder_mead(const Objective& f, std::span<const double> x0,
                      const BoxBounds& bounds, std::size_t max_evals) {
  check_bounds(bounds);
  const std::size_t d = bounds.dim();
  if (x0.size() != d) throw std::invalid_argument("x0 dimension mismatch");
  if (!bounds.contains(x0)) throw std::invalid_argument("x0 outside bounds");
  if (max_evals < 1) throw std::invalid_argument("max_evals must be >= 1");

  std::size_t evals = 0;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> best_point(x0.begin(), x0.end());

  auto clamp_point = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = std::clamp(x[i], bounds.lower[i], bounds.upper[i]);
    }
  };
  auto evaluate = [&](const std::vector<double>& x) {
    const double v = sanitize(f(x));
    ++evals;
    if (v < best_value) {
      best_value = v;
      best_point = x;
    }
    return v;
  };

  std::vector<std::vector<double>> verts;
  std::vector<double> values;
  verts.reserve(d + 1);

  verts.emplace_back(x0.begin(), x0.end());
  for (std::size_t i = 0; i < d && verts.size() < d + 1; ++i) {
    std::vector<double> v(x0.begin(), x0.end());
    double step = kInitialStepFraction * (bounds.upper[i] - bounds.lower[i]);
    if (v[i] + step > bounds.upper[i]) step = -step;
    v[i] += step;
    clamp_point(v);
    verts.push_back(std::move(v));
  }
  for (const auto& v : verts) {
    if (evals >= max_evals) return {best_point, best_value, evals};
    values.push_back(evaluate(v));
  }

  const auto order = [&]() {
    std::vector<std::size_t> idx(verts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> nv(verts.size());
    std::vector<double> nf(verts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      nv[i] = std::move(verts[idx[i]]);
      nf[i] = values[idx[i]];
    }
    verts = std::move(nv);
    values = std::move(nf);
  };

  while (evals < max_evals) {
    order();

    double diameter = 0.0;
    for (std::size_t i = 1; i < verts.size(); ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        diameter = std::max(diameter, std::abs(verts[i][k] - verts[0][k]));
      }
    }
    if (diameter < kDiameterTol) break;

    const std::size_t worst = verts.size() - 1;
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i < worst; ++i) {
      for (std::size_t k = 0; k < d; ++k) centroid[k] += verts[i][k];
    }
    for (double& c : centroid) c /= static_cast<double>(worst);

    auto along = [&](double t) {
      std::vector<double> x(d);
      for (std::size_t k = 0; k < d; ++k) {
        x[k] = centroid[k] + t * (centroid[k] - verts[worst][k]);
      }
      clamp_point(x);
      return x;
    };

    const std::vector<double> xr = along(kReflection);
    const double fr = evaluate(xr);
    if (evals >= max_evals) break;

    if (fr < values[0]) {
      const std::vector<double> xe = along(kExpansion);
      const double fe = evaluate(xe);
      if (fe < fr) {
        verts[worst] = xe;
        values[worst] = fe;
      } else {
        verts[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[worst - 1]) {
      verts[worst] = xr;
      values[worst] = fr;
      continue;
    }

    if (fr < values[worst]) {
      // Outside contraction.
      const std::vector<double> xc = along(kContraction);
      const double fc = evaluate(xc);
      if (fc <= fr) {
        verts[worst] = xc;
        values[worst] = fc;
        continue;
      }
    } else {
      // Inside contraction.
      const std::vector<double> xc = along(-kContraction);
      const double fc = evaluate(xc);
      if (fc < values[worst]) {
        verts[worst] = xc;
        values[worst] = fc;
        continue;
      }
    }
    if (evals >= max_evals) break;

    // Shrink toward the best vertex.
    for (std::size_t i = 1; i < verts.size(); ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        verts[i][k] = verts[0][k] + kShrink * (verts[i][k] - verts[0][k]);
      }
      clamp_point(verts[i]);
      if (evals >= max_evals) return {best_point, best_value, evals};
      values[i] = evaluate(verts[i]);
    }
  }

  return {best_point, best_value, evals};
}

}  // namespace tsmbo
