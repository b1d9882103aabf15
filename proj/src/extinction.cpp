#include "extinction.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "spectral.hpp"

namespace vtl {
namespace {

constexpr double kFixedPointTol = 1e-13;
constexpr long kFixedPointCap = 1000000;

double sup_change(const std::vector<double>& a, const std::vector<double>& b, int count) {
  double worst = 0.0;
  for (int i = 0; i < count; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

ExtinctionResult solve_single(const ModelParams& params) {
  require_valid(params);
  const int n = params.levels;
  ExtinctionResult out;
  // Reducible patterns (eta = 0 or vanishing batch mean) still have a
  // well-defined growth rate; eigenvectors are not needed here.
  PerronOptions opts;
  opts.allow_reducible = true;
  const PerronResult spec = perron(build_single(params), opts);
  out.alpha = spec.alpha;
  out.critical_indeterminate = std::abs(spec.alpha) <= kCriticalBand * params.rate_total();

  if (spec.alpha <= 0.0 && !out.critical_indeterminate) {
    out.q = Eigen::VectorXd::Ones(n);
    out.level_relation_residual = level_relation_residual(params, out.q);
    return out;
  }

  // Supercritical, or inside the critical band where the regime cannot be
  // trusted: iterate the offspring transform from zero either way. In the
  // band the iterate is reported as-is (flagged) instead of forcing ones.
  std::vector<double> q(n, 0.0), next(n, 0.0);
  for (long it = 1; it <= kFixedPointCap; ++it) {
    for (int l = 1; l <= n; ++l) next[l - 1] = offspring_pgf_single(params, l, q);
    const double change = sup_change(next, q, n);
    q = next;
    if (change <= kFixedPointTol) {
      out.iterations = it;
      break;
    }
    if (it == kFixedPointCap) {
      if (out.critical_indeterminate) {
        out.iterations = it;
        break;
      }
      throw regime_error("no-convergence",
                         "extinction fixed point did not converge within the iteration cap");
    }
  }
  for (int l = 1; l <= n; ++l) next[l - 1] = offspring_pgf_single(params, l, q);
  out.residual = sup_change(next, q, n);
  out.q = Eigen::Map<const Eigen::VectorXd>(q.data(), n);
  out.level_relation_residual = level_relation_residual(params, out.q);
  return out;
}

double level_relation_residual(const ModelParams& params, const Eigen::VectorXd& q) {
  const int n = params.levels;
  if (q.size() != n) throw internal_error("extinction vector has wrong dimension");
  if (n == 1) return 0.0;
  const double theta = params.theta();
  const double rn = params.view(n);
  double worst = 0.0;
  for (int l = 1; l < n; ++l) {
    double chain = 0.0;
    for (int i = 0; i <= l; ++i) chain += std::pow(theta, l - i) * params.view(n - i) / rn;
    const double predicted = (q[n - 1] - 1.0) * chain + 1.0;
    worst = std::max(worst, std::abs(q[n - 1 - l] - predicted));
  }
  return worst;
}

TwoCpExtinctionResult solve_two_cp(const TwoCpParams& params, int cp) {
  require_valid(params);
  if (cp != 1 && cp != 2) throw config_error("bad-cp", "cp must be 1 or 2");
  const int n = params.levels;
  const TwoCpOrder order{n};
  TwoCpExtinctionResult out;
  out.cp = cp;

  const ModelParams exclusive = params.exclusive(cp);
  const ExtinctionResult ex = solve_single(exclusive);
  out.q_exclusive = ex.q;
  out.alpha_exclusive = ex.alpha;
  out.exclusive_subcritical = ex.alpha <= 0.0 || ex.critical_indeterminate;

  if (out.exclusive_subcritical) {
    // Once every exclusive start dies out, so does every mixed start. This
    // step assumes mixed batches land on the same level distribution as
    // exclusive ones (level_probs restricted to 1..N-1).
    out.q_top_tracked = Eigen::VectorXd::Ones(n - 1);
    out.q_bottom_tracked = Eigen::VectorXd::Ones(n - 1);
    bool matches = params.level_probs[n - 1] <= 1e-12;
    for (int l = 1; l < n && matches; ++l)
      matches = std::abs(params.rho_bar[l - 1] - params.level_probs[l - 1]) <= 1e-12;
    if (!matches)
      out.warnings.push_back(
          "exclusive chain is subcritical but rho_bar does not match level_probs; "
          "the all-ones mixed extinction vector relies on that match");
    if (ex.critical_indeterminate)
      out.warnings.push_back("exclusive chain is within the critical band");
    return out;
  }

  // Stage 2: minimal fixed point over the mixed coordinates, other provider's
  // exclusive coordinates pinned to 1, tracked exclusives to their stage-1
  // values.
  std::vector<double> s(order.dim(), 1.0);
  for (int l = 1; l <= n; ++l) {
    const int idx = (cp == 1) ? order.ex1(l) : order.ex2(l);
    s[idx] = ex.q[l - 1];
  }
  const auto types = order.types();
  const int mixed = order.mixed_count();
  for (int t = 0; t < mixed; ++t) s[t] = 0.0;

  std::vector<double> cur(mixed, 0.0), next(mixed, 0.0);
  long iterations = 0;
  for (long it = 1; it <= kFixedPointCap; ++it) {
    for (int t = 0; t < mixed; ++t) next[t] = offspring_pgf_two_cp(params, types[t], s);
    const double change = sup_change(next, cur, mixed);
    cur = next;
    for (int t = 0; t < mixed; ++t) s[t] = cur[t];
    if (change <= kFixedPointTol) {
      iterations = it;
      break;
    }
    if (it == kFixedPointCap)
      throw regime_error("no-convergence",
                         "mixed extinction fixed point did not converge within the iteration cap");
  }
  out.iterations = iterations;
  for (int t = 0; t < mixed; ++t) next[t] = offspring_pgf_two_cp(params, types[t], s);
  out.residual = sup_change(next, cur, mixed);

  out.q_top_tracked = Eigen::VectorXd(n - 1);
  out.q_bottom_tracked = Eigen::VectorXd(n - 1);
  for (int l = 1; l < n; ++l) {
    // Tracked post on top at pair level l: its own level is l. Below: l+1.
    out.q_top_tracked[l - 1] = (cp == 1) ? cur[order.top(l)] : cur[order.bottom(l)];
    out.q_bottom_tracked[l - 1] = (cp == 1) ? cur[order.bottom(l)] : cur[order.top(l)];
  }
  return out;
}

KConstants k_constants(const std::vector<double>& view_probs, double theta, double delta) {
  const int n = static_cast<int>(view_probs.size());
  KConstants out;
  out.k1.resize(n);
  out.k2.resize(n);
  out.k3.resize(n);
  for (int l = 1; l <= n; ++l) {
    double k2 = 0.0, k3 = 0.0;
    for (int i = 0; i + l <= n - 1; ++i) {
      k2 += std::pow(theta, i) * view_probs[l + i - 1];
      k3 += std::pow(theta, i) * (1.0 - view_probs[l + i - 1]);
    }
    out.k2[l - 1] = (1.0 - theta) * k2;
    out.k3[l - 1] = (1.0 - theta) * k3;
    out.k1[l - 1] = delta * out.k2[l - 1];
  }
  return out;
}

}  // namespace vtl
