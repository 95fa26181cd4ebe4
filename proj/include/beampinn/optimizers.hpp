#pragma once

// Adam, L-BFGS with a strong-Wolfe line search, and the phase schedule that
// chains them. Everything here works on a flat parameter vector; the
// objective is supplied as a closure.
//
// Iteration counting: one iteration is one objective/gradient evaluation,
// for Adam and L-BFGS alike (line-search trials included).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "beampinn/jets.hpp"
#include "beampinn/losses.hpp"

namespace beampinn {

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;

  AdamState() = default;
  AdamState(std::size_t n, AdamConfig cfg = {}) : config(cfg), m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update in place. Returns false, leaving params and
/// state untouched, when the gradient has a non-finite entry.
inline bool adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient) {
  expects(params.size() == state.m.size() && gradient.size() == params.size(), "adam_step: size mismatch");
  for (double g : gradient)
    if (!std::isfinite(g)) return false;
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
  return true;
}

// ---------------------------------------------------------------------------
// L-BFGS

/// Objective value and gradient at a point.
using Objective = std::function<std::pair<double, std::vector<double>>(std::span<const double>)>;

struct LbfgsConfig {
  std::size_t history = 20;
  std::size_t closure_budget = 20;  // objective evaluations per outer step
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_line_search_evals = 25;
  double tolerance_grad = 1e-14;    // max-norm of gradient
  double tolerance_change = 1e-20;  // absolute loss change, together with tolerance_x
  double tolerance_x = 1e-15;       // max-norm of the accepted step
  std::size_t max_failures = 3;
};

struct LbfgsState {
  LbfgsConfig config;
  std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y), oldest first
  bool has_point = false;  // f and g below belong to the current params
  double f = 0.0;
  std::vector<double> g;
  std::size_t outer_steps = 0;
  std::size_t evaluations = 0;
  std::size_t consecutive_failures = 0;
  bool converged = false;
  bool terminated = false;  // repeated line-search failure
  std::size_t skipped_pairs = 0;

  LbfgsState() = default;
  explicit LbfgsState(LbfgsConfig cfg) : config(cfg) {}
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Minimizer of the cubic interpolating (x1, f1, g1), (x2, f2, g2), clamped to [lo, hi].
inline double cubic_minimizer(double x1, double f1, double g1, double x2, double f2, double g2, double lo, double hi) {
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  const double d2_sq = d1 * d1 - g1 * g2;
  if (d2_sq >= 0.0 && std::isfinite(d2_sq)) {
    const double d2 = std::sqrt(d2_sq);
    double x;
    if (x1 <= x2)
      x = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
    else
      x = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
    if (std::isfinite(x)) return std::clamp(x, lo, hi);
  }
  return 0.5 * (lo + hi);
}

struct LinePoint {
  double alpha = 0.0;
  double f = 0.0;
  std::vector<double> g;
  double gtd = 0.0;
};

struct LineSearchResult {
  LinePoint best;
  bool sufficient_decrease = false;
  bool strong_wolfe = false;
  std::size_t evaluations = 0;
};

/// Bracketing + zoom line search for the strong Wolfe conditions.
inline LineSearchResult strong_wolfe_search(const Objective& objective, std::span<const double> x,
                                            std::span<const double> d, double f0, std::span<const double> g0,
                                            double alpha0, const LbfgsConfig& cfg) {
  const double gtd0 = dot(g0, d);
  const double d_norm = max_abs(d);
  std::vector<double> trial(x.size());
  LineSearchResult res;
  auto eval = [&](double alpha) {
    for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + alpha * d[i];
    auto [f, g] = objective(trial);
    ++res.evaluations;
    LinePoint p{alpha, f, std::move(g), 0.0};
    if (!std::isfinite(p.f)) p.f = std::numeric_limits<double>::infinity();
    p.gtd = std::isfinite(p.f) ? dot(p.g, d) : std::numeric_limits<double>::quiet_NaN();
    return p;
  };
  auto armijo = [&](const LinePoint& p) { return p.f <= f0 + cfg.c1 * p.alpha * gtd0; };
  auto curvature = [&](const LinePoint& p) { return std::abs(p.gtd) <= -cfg.c2 * gtd0; };

  LinePoint prev{0.0, f0, std::vector<double>(g0.begin(), g0.end()), gtd0};
  LinePoint cur = eval(alpha0);
  std::optional<std::pair<LinePoint, LinePoint>> bracket;  // (lo, hi) with lo the better end
  bool first = true;
  while (true) {
    if (!std::isfinite(cur.f) || !armijo(cur) || (!first && cur.f >= prev.f)) {
      bracket.emplace(prev, cur);
      break;
    }
    if (curvature(cur)) {
      res.best = cur;
      res.sufficient_decrease = true;
      res.strong_wolfe = true;
      return res;
    }
    if (cur.gtd >= 0.0) {
      bracket.emplace(cur, prev);
      break;
    }
    if (res.evaluations >= cfg.max_line_search_evals) {
      res.best = cur;
      res.sufficient_decrease = true;
      return res;
    }
    const double lo = cur.alpha + 0.01 * (cur.alpha - prev.alpha);
    const double hi = cur.alpha * 10.0;
    const double next = cubic_minimizer(prev.alpha, prev.f, prev.gtd, cur.alpha, cur.f, cur.gtd, lo, hi);
    prev = std::move(cur);
    cur = eval(next);
    first = false;
  }

  auto& [lo, hi] = *bracket;
  while (res.evaluations < cfg.max_line_search_evals) {
    const double width = std::abs(hi.alpha - lo.alpha);
    if (width * d_norm < 1e-18 || width <= 1e-16 * std::max(lo.alpha, hi.alpha)) break;
    const double a_min = std::min(lo.alpha, hi.alpha);
    const double a_max = std::max(lo.alpha, hi.alpha);
    double alpha;
    if (std::isfinite(hi.f) && std::isfinite(hi.gtd))
      alpha = cubic_minimizer(lo.alpha, lo.f, lo.gtd, hi.alpha, hi.f, hi.gtd, a_min, a_max);
    else
      alpha = 0.5 * (lo.alpha + hi.alpha);
    // keep the trial away from the bracket ends
    const double margin = 0.1 * (a_max - a_min);
    if (alpha - a_min < margin || a_max - alpha < margin) alpha = 0.5 * (lo.alpha + hi.alpha);
    LinePoint p = eval(alpha);
    if (!std::isfinite(p.f) || !armijo(p) || p.f >= lo.f) {
      hi = std::move(p);
    } else {
      if (curvature(p)) {
        res.best = std::move(p);
        res.sufficient_decrease = true;
        res.strong_wolfe = true;
        return res;
      }
      if (p.gtd * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = std::move(p);
    }
  }
  res.best = std::move(lo);
  res.sufficient_decrease = res.best.alpha > 0.0 && armijo(res.best) && res.best.f < f0;
  return res;
}

/// Two-loop recursion: returns -H g for the inverse-Hessian model in `pairs`.
inline std::vector<double> two_loop_direction(const std::deque<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                                              std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alpha(pairs.size());
  std::vector<double> rho(pairs.size());
  for (std::size_t i = pairs.size(); i-- > 0;) {
    const auto& [s, y] = pairs[i];
    rho[i] = 1.0 / dot(y, s);
    alpha[i] = rho[i] * dot(s, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * y[k];
  }
  if (!pairs.empty()) {
    const auto& [s, y] = pairs.back();
    const double gamma = dot(s, y) / dot(y, y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [s, y] = pairs[i];
    const double beta = rho[i] * dot(y, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += s[k] * (alpha[i] - beta);
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace detail

/// Outcome of one outer L-BFGS step.
struct LbfgsStepReport {
  std::size_t evaluations = 0;
  std::size_t accepted_iterations = 0;
  std::size_t line_search_failures = 0;
};

/// One outer step: quasi-Newton iterations until the step's evaluation budget
/// is used up or a convergence test fires. Every accepted iterate satisfies the
/// sufficient-decrease condition, so the loss never increases across accepted
/// steps.
inline LbfgsStepReport lbfgs_step(LbfgsState& state, std::vector<double>& params, const Objective& objective) {
  const auto& cfg = state.config;
  LbfgsStepReport report;
  if (state.terminated || state.converged) return report;
  auto evaluate = [&](std::span<const double> x) {
    ++report.evaluations;
    ++state.evaluations;
    return objective(x);
  };
  if (!state.has_point) {
    auto [f, g] = evaluate(params);
    if (!std::isfinite(f) || !std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); })) {
      state.terminated = true;
      return report;
    }
    state.f = f;
    state.g = std::move(g);
    state.has_point = true;
  }
  ++state.outer_steps;

  while (report.evaluations < cfg.closure_budget) {
    if (detail::max_abs(state.g) <= cfg.tolerance_grad) {
      state.converged = true;
      break;
    }
    std::vector<double> d = detail::two_loop_direction(state.pairs, state.g);
    double gtd = detail::dot(state.g, d);
    if (!(gtd < 0.0)) {
      state.pairs.clear();
      d.assign(state.g.begin(), state.g.end());
      for (double& v : d) v = -v;
      gtd = detail::dot(state.g, d);
    }
    double alpha0 = 1.0;
    if (state.pairs.empty()) {
      double l1 = 0.0;
      for (double v : state.g) l1 += std::abs(v);
      alpha0 = std::min(1.0, 1.0 / l1);
    }
    auto ls = detail::strong_wolfe_search(evaluate, params, d, state.f, state.g, alpha0, cfg);
    if (!ls.sufficient_decrease) {
      ++report.line_search_failures;
      // Steepest-descent fallback with backtracking.
      std::vector<double> sd(state.g.size());
      for (std::size_t i = 0; i < sd.size(); ++i) sd[i] = -state.g[i];
      const double sd_gtd = -detail::dot(state.g, state.g);
      double l1 = 0.0;
      for (double v : state.g) l1 += std::abs(v);
      double alpha = std::min(1.0, 1.0 / l1);
      bool ok = false;
      std::vector<double> trial(params.size());
      for (int k = 0; k < 30 && !ok; ++k, alpha *= 0.5) {
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = params[i] + alpha * sd[i];
        auto [f, g] = evaluate(trial);
        if (std::isfinite(f) && f <= state.f + cfg.c1 * alpha * sd_gtd && f < state.f) {
          ls.best = detail::LinePoint{alpha, f, std::move(g), 0.0};
          d = sd;
          ok = true;
        }
      }
      if (!ok) {
        state.pairs.clear();
        if (++state.consecutive_failures >= cfg.max_failures) state.terminated = true;
        break;
      }
    }
    state.consecutive_failures = 0;
    const double alpha = ls.best.alpha;
    std::vector<double> s(params.size()), y(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      s[i] = alpha * d[i];
      params[i] += s[i];
      y[i] = ls.best.g[i] - state.g[i];
    }
    const double f_change = std::abs(ls.best.f - state.f);
    const double ys = detail::dot(y, s);
    if (ys > 1e-10 * detail::dot(y, y) && ys > 0.0) {
      if (cfg.history > 0) {
        if (state.pairs.size() == cfg.history) state.pairs.pop_front();
        state.pairs.emplace_back(std::move(s), std::move(y));
      }
    } else {
      ++state.skipped_pairs;
    }
    state.f = ls.best.f;
    state.g = std::move(ls.best.g);
    ++report.accepted_iterations;
    if (f_change <= cfg.tolerance_change && alpha * detail::max_abs(d) <= cfg.tolerance_x) {
      state.converged = true;
      break;
    }
  }
  return report;
}

/// Plain minimization driver: up to `outer_steps` L-BFGS steps.
inline LbfgsState lbfgs_minimize(std::vector<double>& params, const Objective& objective, std::size_t outer_steps,
                                 LbfgsConfig cfg = {}) {
  LbfgsState state(cfg);
  for (std::size_t i = 0; i < outer_steps && !state.converged && !state.terminated; ++i)
    lbfgs_step(state, params, objective);
  return state;
}

// ---------------------------------------------------------------------------
// Schedules

enum class OptimizerKind { adam, lbfgs };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "lbfgs"; }

inline std::optional<OptimizerKind> parse_optimizer(std::string_view s) {
  if (s == "adam" || s == "Adam") return OptimizerKind::adam;
  if (s == "lbfgs" || s == "L-BFGS" || s == "LBFGS") return OptimizerKind::lbfgs;
  return std::nullopt;
}

/// One phase: for Adam, `count` is iterations; for L-BFGS, outer steps.
struct Phase {
  OptimizerKind optimizer = OptimizerKind::adam;
  std::size_t count = 0;
};

struct Schedule {
  std::vector<Phase> phases;
  AdamConfig adam;
  LbfgsConfig lbfgs;

  void validate() const { expects(!phases.empty(), "schedule needs at least one phase"); }
};

struct IterationLog {
  std::size_t iteration = 0;  // 1-based count of evaluations
  double total = 0.0;
  double residual = 0.0;
  std::array<double, 4> bc{};  // squared boundary residual of each operator
  OptimizerKind phase = OptimizerKind::adam;
};

struct TrainingRecord {
  std::vector<IterationLog> history;
  bool aborted = false;   // non-finite loss at the start of an L-BFGS phase
  std::string abort_reason;
  bool stalled = false;   // an L-BFGS phase stopped after repeated line-search failure
  std::string stall_reason;
  std::size_t nonfinite_steps = 0;
  std::vector<double> lbfgs_step_losses;  // loss at the accepted iterate after each L-BFGS outer step
  double best_total = std::numeric_limits<double>::infinity();

  std::size_t iterations() const { return history.size(); }
};

/// Hooks invoked while a schedule runs. `on_checkpoint` receives the current
/// iterate every `checkpoint_every` evaluations and once at the end.
struct Recorder {
  std::function<void(const IterationLog&)> on_evaluation;
  std::function<void(std::size_t iteration, std::span<const double> theta)> on_checkpoint;
  std::size_t checkpoint_every = 50;
};

inline TrainingRecord run_schedule(const Schedule& schedule, const LossFunction& loss_fn, std::vector<double>& theta,
                                   const Recorder& recorder = {}) {
  schedule.validate();
  TrainingRecord record;
  std::size_t last_checkpoint = 0;
  bool any = false;

  auto log = [&](const LossBreakdown& lb, OptimizerKind phase) {
    IterationLog it;
    it.iteration = record.history.size() + 1;
    it.total = lb.total;
    it.residual = lb.residual;
    for (std::size_t i = 0; i < 4; ++i) it.bc[i] = lb.boundary_residuals[i] * lb.boundary_residuals[i];
    it.phase = phase;
    record.history.push_back(it);
    record.best_total = std::min(record.best_total, lb.total);
    any = true;
    if (recorder.on_evaluation) recorder.on_evaluation(it);
    if (recorder.on_checkpoint && recorder.checkpoint_every > 0 && it.iteration % recorder.checkpoint_every == 0) {
      recorder.on_checkpoint(it.iteration, theta);
      last_checkpoint = it.iteration;
    }
  };

  for (const auto& phase : schedule.phases) {
    if (record.aborted) break;
    if (phase.optimizer == OptimizerKind::adam) {
      AdamState state(theta.size(), schedule.adam);
      for (std::size_t i = 0; i < phase.count; ++i) {
        const LossBreakdown lb = loss_fn(theta);
        log(lb, OptimizerKind::adam);
        if (!lb.finite() || !adam_step(state, theta, lb.gradient)) ++record.nonfinite_steps;
      }
    } else {
      // theta only changes when a line-search point is accepted, so
      // checkpoints taken mid-search see the current accepted iterate.
      LbfgsState state(schedule.lbfgs);
      const Objective objective = [&](std::span<const double> x) {
        LossBreakdown lb = loss_fn(x);
        log(lb, OptimizerKind::lbfgs);
        return std::pair<double, std::vector<double>>(lb.total, std::move(lb.gradient));
      };
      for (std::size_t i = 0; i < phase.count && !state.converged && !state.terminated; ++i) {
        lbfgs_step(state, theta, objective);
        if (state.has_point) record.lbfgs_step_losses.push_back(state.f);
      }
      if (state.terminated && !state.has_point) {
        record.aborted = true;
        record.abort_reason = "non-finite loss at start of L-BFGS phase";
      } else if (state.terminated) {
        record.stalled = true;
        record.stall_reason = "L-BFGS line search failed repeatedly";
      }
    }
  }
  if (any && recorder.on_checkpoint && last_checkpoint != record.history.size())
    recorder.on_checkpoint(record.history.size(), theta);
  return record;
}

}  // namespace beampinn
