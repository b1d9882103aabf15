#include "optimize.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "errors.hpp"
#include "extinction.hpp"
#include "shares.hpp"
#include "spectral.hpp"

namespace vtl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded(const std::function<double()>& eval) {
  try {
    return eval();
  } catch (const VtlError& e) {
    if (e.code() == ErrorCode::Regime) return kInf;
    throw;
  }
}

struct BestPoint {
  double x = 0.0;
  double cost = kInf;
  void offer(double xx, double cc) {
    if (cc < cost || (cc == cost && xx < x)) {
      x = xx;
      cost = cc;
    }
  }
};

ScalarOptimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              double grid_step, double tol) {
  ScalarOptimum out;
  BestPoint best;
  const long cells = std::max(1L, std::lround((hi - lo) / grid_step));
  for (long k = 0; k <= cells; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(cells);
    best.offer(x, f(x));
    ++out.evaluations;
  }
  if (!std::isfinite(best.cost))
    throw regime_error("no-feasible-quality",
                       "objective is undefined over the whole quality range");

  const double h = (hi - lo) / static_cast<double>(cells);
  double a = std::max(lo, best.x - h);
  double b = std::min(hi, best.x + h);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  out.evaluations += 2;
  while (b - a > tol) {
    if (fc <= fd) {  // ties shrink toward the smaller quality
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
    ++out.evaluations;
    best.offer(c, fc);
    best.offer(d, fd);
  }
  out.eta = best.x;
  out.cost = best.cost;
  out.interior = best.x > lo + tol && best.x < hi - tol;
  return out;
}

}  // namespace

double objective_cost(const ModelParams& base, const OptimizeOptions& options, double eta) {
  if (options.psi < 0.0)
    throw config_error("bad-psi", "trade-off factor must be nonnegative");
  ModelParams params = base;
  params.eta = eta;
  switch (options.objective) {
    case Objective::ExtinctionPlusCost: {
      const double q = guarded([&] {
        const ExtinctionResult ext = solve_single(params);
        if (options.aggregate == ExtinctionAggregate::FirstLevel) return ext.q[0];
        double agg = 0.0;
        for (int l = 1; l <= params.levels; ++l) agg += params.rho(l) * ext.q[l - 1];
        return agg;
      });
      return q + options.psi * eta * eta;
    }
    case Objective::GrowthRateMinusCost: {
      if (options.t_eval <= 0.0)
        throw config_error("bad-eval-time", "evaluation time must be positive");
      const double rate = guarded([&] {
        const Eigen::MatrixXd y =
            expected_shares(params, {options.t_eval}, ShareConvention::PaperK);
        const double r = std::log(y(0, 0)) / options.t_eval;
        if (!std::isfinite(r))
          throw regime_error("unrepresentable-objective",
                             "expected shares overflow at the evaluation time");
        return r;
      });
      // Maximization: a refusal (+inf) must stay infeasible, not become -inf.
      if (!std::isfinite(rate)) return kInf;
      return -rate + options.psi * eta * eta;
    }
    case Objective::SubcriticalSharesMinusCost: {
      if (params.friends.mean() >= 1.0)
        throw config_error("not-subcritical-family",
                           "eventual-shares objective needs a mean batch size below one");
      const double y1 = guarded([&] { return nonviral_expected(params).y[0]; });
      if (!std::isfinite(y1)) return kInf;
      return -y1 + options.psi * eta * eta;
    }
    default:
      throw config_error("bad-objective", "two-provider objective used with a single provider");
  }
}

double two_cp_cost(const TwoCpParams& base, const OptimizeOptions& options, int cp,
                   double eta_own, double eta_other) {
  if (cp != 1 && cp != 2) throw config_error("bad-cp", "cp must be 1 or 2");
  if (options.psi < 0.0)
    throw config_error("bad-psi", "trade-off factor must be nonnegative");
  TwoCpParams params = base;
  (cp == 1 ? params.eta1 : params.eta2) = eta_own;
  (cp == 1 ? params.eta2 : params.eta1) = eta_other;
  const double w = cp == 1 ? params.w1 : params.w2;
  const double cost = options.psi * (w * eta_own) * (w * eta_own);
  switch (options.objective) {
    case Objective::TwoCpExtinction: {
      const double pm =
          guarded([&] { return solve_two_cp(params, cp).seed_pair_product(); });
      return pm + cost;
    }
    case Objective::TwoCpShares: {
      const double pm = guarded([&] {
        PerronOptions opts;
        opts.allow_reducible = true;
        const double alpha_ex = perron(build_single(params.exclusive(cp)), opts).alpha;
        const double band = kCriticalBand * params.rate_total();
        if (std::abs(alpha_ex) <= band)
          throw regime_error("critical-indeterminate",
                             "exclusive chain sits on the critical boundary");
        double value;
        if (alpha_ex > 0.0) {
          const TwoCpCoefficients coeffs = two_cp_coefficients(params, cp);
          const Eigen::MatrixXd y = two_cp_trajectory(coeffs, {options.t_eval});
          value = y(0, 0) + y(0, params.levels - 1);  // both seed orientations
        } else {
          const TwoCpNonviral totals = two_cp_nonviral(params, cp);
          value = totals.y_top[0] + totals.y_bottom[0];
        }
        // The waveform coefficients diverge toward the open-case boundary;
        // a non-finite value means the formula cannot price this point.
        if (!std::isfinite(value))
          throw regime_error("unrepresentable-objective",
                             "share coefficients overflow near the open-case boundary");
        return value;
      });
      if (!std::isfinite(pm)) return kInf;
      return -pm + cost;
    }
    default:
      throw config_error("bad-objective", "single-provider objective used with two providers");
  }
}

ScalarOptimum optimal_quality(const ModelParams& base, const OptimizeOptions& options) {
  ModelParams probe = base;
  probe.eta = 0.0;
  require_valid(probe);
  return minimize_scalar([&](double eta) { return objective_cost(base, options, eta); }, 0.0,
                         1.0, options.grid_step, options.tol);
}

ScalarOptimum best_response(const TwoCpParams& base, const OptimizeOptions& options, int cp,
                            double eta_other) {
  if (cp != 1 && cp != 2) throw config_error("bad-cp", "cp must be 1 or 2");
  const double hi = 1.0 / (cp == 1 ? base.w1 : base.w2);
  return minimize_scalar(
      [&](double eta) { return two_cp_cost(base, options, cp, eta, eta_other); }, 0.0, hi,
      options.grid_step, options.tol);
}

namespace {

NashResult nash_from(const TwoCpParams& base, const OptimizeOptions& options, double eta1,
                     double eta2) {
  NashResult out;
  out.eta1 = eta1;
  out.eta2 = eta2;
  for (long round = 1; round <= options.max_rounds; ++round) {
    const double prev1 = out.eta1, prev2 = out.eta2;
    out.eta1 = best_response(base, options, 1, out.eta2).eta;
    out.eta2 = best_response(base, options, 2, out.eta1).eta;
    out.rounds = round;
    out.iterates.emplace_back(out.eta1, out.eta2);
    if (std::abs(out.eta1 - prev1) <= options.tol && std::abs(out.eta2 - prev2) <= options.tol) {
      out.converged = true;
      break;
    }
  }
  if (out.converged) out.iterates.clear();
  out.cost1 = two_cp_cost(base, options, 1, out.eta1, out.eta2);
  out.cost2 = two_cp_cost(base, options, 2, out.eta2, out.eta1);
  return out;
}

}  // namespace

NashResult nash_equilibrium(const TwoCpParams& base, const OptimizeOptions& options) {
  return nash_from(base, options, 1.0 / base.w1, 1.0 / base.w2);
}

std::vector<NashResult> nash_multi_start(const TwoCpParams& base,
                                         const OptimizeOptions& options) {
  const double fractions[3] = {0.1, 0.55, 1.0};
  std::vector<NashResult> distinct;
  for (const double f1 : fractions) {
    for (const double f2 : fractions) {
      NashResult r = nash_from(base, options, f1 / base.w1, f2 / base.w2);
      bool seen = false;
      for (const NashResult& d : distinct)
        if (std::abs(d.eta1 - r.eta1) <= 1e-4 && std::abs(d.eta2 - r.eta2) <= 1e-4) {
          seen = true;
          break;
        }
      if (!seen) distinct.push_back(std::move(r));
    }
  }
  return distinct;
}

DeviationScan deviation_scan(const TwoCpParams& base, const OptimizeOptions& options,
                             double eta1, double eta2, double step) {
  DeviationScan out;
  out.cost1 = two_cp_cost(base, options, 1, eta1, eta2);
  out.cost2 = two_cp_cost(base, options, 2, eta2, eta1);
  for (int cp = 1; cp <= 2; ++cp) {
    const double hi = 1.0 / (cp == 1 ? base.w1 : base.w2);
    const double here = cp == 1 ? out.cost1 : out.cost2;
    const double other = cp == 1 ? eta2 : eta1;
    double best_gain = 0.0;
    const long cells = std::max(1L, std::lround(hi / step));
    for (long k = 0; k <= cells; ++k) {
      const double eta = hi * static_cast<double>(k) / static_cast<double>(cells);
      const double c = two_cp_cost(base, options, cp, eta, other);
      best_gain = std::max(best_gain, here - c);
    }
    (cp == 1 ? out.eps1 : out.eps2) = best_gain;
  }
  out.certified = out.eps1 <= 1e-3 * std::max(std::abs(out.cost1), 1e-12) &&
                  out.eps2 <= 1e-3 * std::max(std::abs(out.cost2), 1e-12);
  return out;
}

}  // namespace vtl
