#pragma once

// Radial infimum scans: estimate inf over the sphere |x| = r of a scalar
// objective, for every radius of a geometric schedule. The estimate is a
// multi-start projected-gradient search, warm-started from the previous
// radius, with a deterministic seeded start layout and an order-independent
// min-reduction (lexicographic argmin tie-break), so results are bit-identical
// for a fixed (schedule, starts, seed) regardless of thread count.
//
// Scan values are heuristic upper bounds of the true infimum: every reported
// value is attained at an evaluated feasible point.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fibcheck/expr.hpp"
#include "fibcheck/linalg.hpp"
#include "fibcheck/rng.hpp"

namespace fibcheck {

class ScanError : public std::runtime_error {
 public:
  explicit ScanError(const std::string& what) : std::runtime_error(what) {}
};

/// Scalar objective on R^n. value() returns nullopt where a domain guard
/// fires; gradient() may fall back to central differences.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dim() const = 0;
  virtual std::string id() const = 0;
  virtual std::optional<double> value(std::span<const double> x) const = 0;

  virtual bool gradient(std::span<const double> x, std::span<double> out) const {
    return fd_gradient(x, out);
  }

 protected:
  bool fd_gradient(std::span<const double> x, std::span<double> out) const {
    std::vector<double> p(x.begin(), x.end());
    for (std::size_t i = 0; i < p.size(); ++i) {
      double h = 1e-7 * (1.0 + std::abs(p[i]));
      double orig = p[i];
      p[i] = orig + h;
      auto hi = value(p);
      p[i] = orig - h;
      auto lo = value(p);
      p[i] = orig;
      if (!hi || !lo) return false;
      out[i] = (*hi - *lo) / (2.0 * h);
    }
    return true;
  }
};

/// sqrt(sum of c_i(x)^2) with exact gradients from the expression trees.
/// Covers |grad g|, |f(x) - y| and friends.
class SumSquaresSqrtObjective final : public Objective {
 public:
  SumSquaresSqrtObjective(std::vector<Expr> components, int n, std::string id)
      : comps_(std::move(components)), n_(n), id_(std::move(id)) {
    for (const auto& c : comps_) {
      std::vector<Expr> g;
      g.reserve(static_cast<std::size_t>(n_));
      for (int i = 0; i < n_; ++i) g.push_back(c.diff(i));
      comp_grads_.push_back(std::move(g));
    }
  }

  int dim() const override { return n_; }
  std::string id() const override { return id_; }

  std::optional<double> value(std::span<const double> x) const override {
    double s = 0.0;
    for (const auto& c : comps_) {
      auto v = c.try_eval(x);
      if (!v) return std::nullopt;
      s += *v * *v;
    }
    return std::sqrt(s);
  }

  bool gradient(std::span<const double> x, std::span<double> out) const override {
    // grad sqrt(S) = (sum c_i grad c_i) / sqrt(S); at a zero of S fall back.
    double s = 0.0;
    std::vector<double> cvals(comps_.size());
    for (std::size_t k = 0; k < comps_.size(); ++k) {
      auto v = comps_[k].try_eval(x);
      if (!v) return false;
      cvals[k] = *v;
      s += *v * *v;
    }
    double root = std::sqrt(s);
    if (root == 0.0) return false;
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = 0.0;
    for (std::size_t k = 0; k < comps_.size(); ++k) {
      for (int i = 0; i < n_; ++i) {
        auto d = comp_grads_[k][static_cast<std::size_t>(i)].try_eval(x);
        if (!d) return false;
        out[static_cast<std::size_t>(i)] += cvals[k] * *d;
      }
    }
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] /= root;
    return true;
  }

 private:
  std::vector<Expr> comps_;
  int n_;
  std::string id_;
  std::vector<std::vector<Expr>> comp_grads_;
};

/// |grad g| for a scalar expression g on R^n.
inline std::shared_ptr<Objective> gradient_norm_objective(const Expr& g, int n, const std::string& id) {
  return std::make_shared<SumSquaresSqrtObjective>(gradient_exprs(g, n), n, id);
}

/// |f(x) - y| for a target point y.
inline std::shared_ptr<Objective> distance_to_target_objective(const ExprMap& f,
                                                               std::span<const double> y,
                                                               const std::string& id) {
  std::vector<Expr> comps;
  comps.reserve(f.components.size());
  for (std::size_t i = 0; i < f.components.size(); ++i)
    comps.push_back(f.components[i] - Expr::constant(y[i]));
  return std::make_shared<SumSquaresSqrtObjective>(std::move(comps), f.n_in, id);
}

/// Wraps an arbitrary callable; gradients via central differences.
class FunctionObjective final : public Objective {
 public:
  using Fn = std::function<std::optional<double>(std::span<const double>)>;
  FunctionObjective(Fn fn, int n, std::string id) : fn_(std::move(fn)), n_(n), id_(std::move(id)) {}
  int dim() const override { return n_; }
  std::string id() const override { return id_; }
  std::optional<double> value(std::span<const double> x) const override { return fn_(x); }

 private:
  Fn fn_;
  int n_;
  std::string id_;
};

/// Strictly increasing geometric radius grid.
struct RadiusSchedule {
  double r_min = 1.0;
  double r_max = 1e6;
  int points_per_decade = 16;

  std::vector<double> radii() const {
    if (!(r_min > 0.0) || !(r_min < r_max) || points_per_decade < 1)
      throw ScanError("schedule requires 0 < r_min < r_max and points_per_decade >= 1");
    double decades = std::log10(r_max / r_min);
    int count = std::max(2, static_cast<int>(std::lround(decades * points_per_decade)) + 1);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      double t = static_cast<double>(k) / static_cast<double>(count - 1);
      out[static_cast<std::size_t>(k)] = r_min * std::pow(r_max / r_min, t);
    }
    out.front() = r_min;
    out.back() = r_max;
    return out;
  }

  /// Geometric midpoint, used as the "large radius" cutoff in verdict rules.
  double r_mid() const { return std::sqrt(r_min * r_max); }
};

struct ScanPoint {
  double r = 0.0;
  bool ok = false;            // false: objective undefined at every start
  double value = 0.0;
  std::vector<double> argmin;
  int starts = 0;
  int skipped = 0;
  std::uint64_t seed = 0;
};

struct RadialScan {
  std::string objective_id;
  std::string map_id;
  std::uint64_t seed = 0;
  int starts = 0;
  RadiusSchedule schedule;
  std::vector<ScanPoint> points;

  /// Trapezoid integral of the scan values over radii <= r_cut.
  double trapezoid_integral(double r_cut) const {
    double total = 0.0;
    const ScanPoint* prev = nullptr;
    for (const auto& p : points) {
      if (!p.ok || p.r > r_cut) {
        if (p.r > r_cut) break;
        prev = nullptr;
        continue;
      }
      if (prev) total += 0.5 * (prev->value + p.value) * (p.r - prev->r);
      prev = &p;
    }
    return total;
  }
};

struct SphereMinResult {
  bool ok = false;
  double value = 0.0;
  std::vector<double> argmin;
  int skipped = 0;
};

struct SphereMinOptions {
  int max_iterations = 220;
  int max_backtracks = 45;
  int threads = 1;
};

namespace detail {

inline bool lex_less(std::span<const double> a, std::span<const double> b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

struct Candidate {
  bool ok = false;
  double value = 0.0;
  std::vector<double> point;
};

/// Projected-gradient descent constrained to |x| = r with Armijo backtracking.
inline Candidate descend_on_sphere(const Objective& obj, double r, std::vector<double> x,
                                   const SphereMinOptions& opt) {
  Candidate out;
  const int n = obj.dim();
  auto renorm = [&](std::vector<double>& v) -> bool {
    double nv = norm2(v);
    if (!(nv > 0.0) || !std::isfinite(nv)) return false;
    double f = r / nv;
    for (auto& c : v) c *= f;
    return true;
  };
  if (!renorm(x)) return out;
  auto fx_opt = obj.value(x);
  if (!fx_opt || !std::isfinite(*fx_opt)) return out;
  double fx = *fx_opt;

  std::vector<double> g(static_cast<std::size_t>(n));
  std::vector<double> trial(static_cast<std::size_t>(n));
  double step = -1.0;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (!obj.gradient(x, g)) break;
    // Project out the radial component.
    double gr = dot(g, x) / (r * r);
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] -= gr * x[static_cast<std::size_t>(i)];
    double ng = norm2(g);
    if (!std::isfinite(ng)) break;
    if (ng <= 1e-16 * (1.0 + std::abs(fx))) break;
    if (step <= 0.0) step = 0.1 * r / ng;

    bool accepted = false;
    double t = step;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      for (int i = 0; i < n; ++i)
        trial[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - t * g[static_cast<std::size_t>(i)];
      if (renorm(trial)) {
        auto ft = obj.value(trial);
        if (ft && std::isfinite(*ft) && *ft <= fx - 1e-4 * t * ng * ng) {
          x = trial;
          fx = *ft;
          step = 2.0 * t;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) break;
    if (step * ng <= 1e-17 * r) break;
  }
  out.ok = true;
  out.value = fx;
  out.point = std::move(x);
  return out;
}

}  // namespace detail

/// Multi-start estimate of inf over |x| = r of the objective.
/// Start s draws its direction from mix_seed(seed, s), so the candidate set
/// is a pure function of (seed, starts); optional warm starts join the pool.
inline SphereMinResult sphere_min(const Objective& obj, double r, int starts, std::uint64_t seed,
                                  const std::vector<std::vector<double>>& warm_starts = {},
                                  const SphereMinOptions& opt = {}) {
  if (!(r > 0.0)) throw ScanError("sphere_min: radius must be positive");
  const int n = obj.dim();
  const int total = starts + static_cast<int>(warm_starts.size());
  std::vector<detail::Candidate> results(static_cast<std::size_t>(total));

  auto run_range = [&](int begin, int end) {
    for (int s = begin; s < end; ++s) {
      std::vector<double> x0;
      if (s < static_cast<int>(warm_starts.size())) {
        x0 = warm_starts[static_cast<std::size_t>(s)];
        if (static_cast<int>(x0.size()) != n) continue;
      } else {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(s - static_cast<int>(warm_starts.size()))));
        x0 = rng.unit_vector(n);
        for (auto& c : x0) c *= r;
      }
      results[static_cast<std::size_t>(s)] = detail::descend_on_sphere(obj, r, std::move(x0), opt);
    }
  };

  int threads = std::max(1, opt.threads);
  if (threads == 1 || total <= 1) {
    run_range(0, total);
  } else {
    threads = std::min(threads, total);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    int chunk = (total + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int begin = t * chunk;
      int end = std::min(total, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Sequential reduction in start order: thread-count independent by design.
  SphereMinResult best;
  for (const auto& c : results) {
    if (!c.ok) {
      ++best.skipped;
      continue;
    }
    if (!best.ok || c.value < best.value ||
        (c.value == best.value && detail::lex_less(c.point, best.argmin))) {
      best.ok = true;
      best.value = c.value;
      best.argmin = c.point;
    }
  }
  return best;
}

/// Runs sphere_min over the whole schedule, warm-starting each radius with
/// the previous argmin rescaled. Per-radius failures are recorded, not fatal.
inline RadialScan radial_scan(const Objective& obj, const RadiusSchedule& schedule, int starts,
                              std::uint64_t seed, const SphereMinOptions& opt = {},
                              const std::string& map_id = "") {
  RadialScan scan;
  scan.objective_id = obj.id();
  scan.map_id = map_id;
  scan.seed = seed;
  scan.starts = starts;
  scan.schedule = schedule;
  auto radii = schedule.radii();
  scan.points.reserve(radii.size());
  std::vector<std::vector<double>> warm;
  for (std::size_t idx = 0; idx < radii.size(); ++idx) {
    double r = radii[idx];
    std::uint64_t radius_seed = mix_seed(seed, 0x5ca1ab1eULL, idx);
    if (!warm.empty()) {
      double wn = norm2(warm.front());
      if (wn > 0.0) {
        for (auto& c : warm.front()) c *= r / wn;
      } else {
        warm.clear();
      }
    }
    auto res = sphere_min(obj, r, starts, radius_seed, warm, opt);
    ScanPoint p;
    p.r = r;
    p.starts = starts + static_cast<int>(warm.size());
    p.seed = radius_seed;
    p.skipped = res.skipped;
    p.ok = res.ok;
    if (res.ok) {
      p.value = res.value;
      p.argmin = res.argmin;
      warm.assign(1, res.argmin);
    } else {
      warm.clear();
    }
    scan.points.push_back(std::move(p));
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Tail fit and witnesses
// ---------------------------------------------------------------------------

struct TailFit {
  double alpha = 0.0;     // exponent in value ~ c * r^alpha
  double log_c = 0.0;
  double rms_residual = 0.0;
  int n_points = 0;
};

/// Least-squares power-law fit log(value) = log_c + alpha*log(r) over the
/// trailing `window_decades` of the scan. Requires >= 8 points, all positive;
/// nonpositive values in the window yield nullopt (inconclusive marker).
inline std::optional<TailFit> tail_fit(const RadialScan& scan, double window_decades) {
  double r_hi = 0.0;
  for (const auto& p : scan.points)
    if (p.ok) r_hi = std::max(r_hi, p.r);
  if (r_hi <= 0.0) return std::nullopt;
  double r_lo = r_hi / std::pow(10.0, window_decades);
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : scan.points) {
    if (!p.ok || p.r < r_lo) continue;
    if (!(p.value > 0.0)) return std::nullopt;
    pts.emplace_back(std::log(p.r), std::log(p.value));
  }
  if (pts.size() < 8) return std::nullopt;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (auto [lx, ly] : pts) {
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double m = static_cast<double>(pts.size());
  double denom = m * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  TailFit fit;
  fit.alpha = (m * sxy - sx * sy) / denom;
  fit.log_c = (sy - fit.alpha * sx) / m;
  double ss = 0.0;
  for (auto [lx, ly] : pts) {
    double e = ly - (fit.log_c + fit.alpha * lx);
    ss += e * e;
  }
  fit.rms_residual = std::sqrt(ss / m);
  fit.n_points = static_cast<int>(pts.size());
  return fit;
}

/// Variant that ignores exact zeros in the deep tail: fits the trailing
/// window of the positive prefix and reports whether zeros followed it.
/// (Values that underflow to 0 block "holds" but are consistent with decay.)
struct TailClassification {
  std::optional<TailFit> fit;
  bool zeros_after_fit = false;
};

inline TailClassification tail_fit_positive(const RadialScan& scan, double window_decades) {
  TailClassification out;
  double r_pos_hi = 0.0;
  for (const auto& p : scan.points) {
    if (!p.ok) continue;
    if (p.value > 0.0)
      r_pos_hi = std::max(r_pos_hi, p.r);
  }
  if (r_pos_hi <= 0.0) return out;
  for (const auto& p : scan.points)
    if (p.ok && p.r > r_pos_hi && !(p.value > 0.0)) out.zeros_after_fit = true;
  RadialScan clipped = scan;
  clipped.points.clear();
  for (const auto& p : scan.points)
    if (p.r <= r_pos_hi) clipped.points.push_back(p);
  out.fit = tail_fit(clipped, window_decades);
  return out;
}

struct WitnessPoint {
  std::vector<double> x;
  double norm = 0.0;
  double objective = 0.0;          // scan objective at x (e.g. |grad g| or r*nu)
  std::vector<double> map_value;   // g(x)
};

/// Finite stand-in for a sequence escaping to infinity, with diagnostics
/// that can be recomputed from the stored points.
struct Witness {
  std::vector<WitnessPoint> points;

  bool norms_strictly_increasing() const {
    for (std::size_t i = 1; i < points.size(); ++i)
      if (!(points[i].norm > points[i - 1].norm)) return false;
    return true;
  }
};

}  // namespace fibcheck
