#include "shares.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"
#include "spectral.hpp"

namespace vtl {
namespace {

// Forcing vector (lambda+nu) k in rate units.
Eigen::VectorXd forcing(const ModelParams& params, ShareConvention convention) {
  const int n = params.levels;
  Eigen::VectorXd g(n);
  if (convention == ShareConvention::PaperK) {
    // One count per wake-up event, plus the level-N shift-out.
    for (int l = 1; l <= n; ++l) g[l - 1] = params.nu;
    g[n - 1] += params.lambda;
  } else {
    const double batch = params.friends.batch_mean(params.eta);
    for (int l = 1; l <= n; ++l) g[l - 1] = params.nu * params.view(l) * batch;
  }
  return g;
}

double seed_count(ShareConvention convention) {
  return convention == ShareConvention::PaperK ? 1.0 : 0.0;
}

struct SolvedForcing {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;  // A^{-1} (lambda+nu) k
  double rcond = 0.0;
};

SolvedForcing solve_forcing(const ModelParams& params, ShareConvention convention) {
  SolvedForcing out;
  out.a = build_single(params).A;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(out.a);
  const Eigen::MatrixXd inv = lu.inverse();
  const double norm_a = out.a.cwiseAbs().rowwise().sum().maxCoeff();
  const double norm_inv = inv.cwiseAbs().rowwise().sum().maxCoeff();
  out.rcond = 1.0 / std::max(norm_a * norm_inv, 1e-300);
  out.b = lu.solve(forcing(params, convention));
  return out;
}

double alpha_of(const ModelParams& params) {
  PerronOptions opts;
  opts.allow_reducible = true;
  return perron(build_single(params), opts).alpha;
}

}  // namespace

Trajectory viral_trajectory(const ModelParams& params, const std::vector<double>& t_grid,
                            ShareConvention convention, bool subtract_seed) {
  require_valid(params);
  const double alpha = alpha_of(params);
  if (alpha <= 0.0)
    throw regime_error("not-viral",
                       "growth rate is nonpositive; use the sub-critical expected-shares solver");
  const SolvedForcing sf = solve_forcing(params, convention);
  if (sf.rcond < 1e-12)
    throw regime_error("ill-conditioned",
                       "generator is numerically singular (near-critical regime)");
  const int n = params.levels;
  Trajectory out;
  out.t = t_grid;
  out.alpha = alpha;
  out.convention = convention;
  const double y0 = seed_count(convention);
  out.seed_included = convention == ShareConvention::PaperK && !subtract_seed;
  const Eigen::VectorXd base = Eigen::VectorXd::Constant(n, y0) + sf.b;
  out.y.resize(static_cast<long>(t_grid.size()), n);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0) throw config_error("bad-time-grid", "times must be nonnegative");
    const Eigen::MatrixXd expm = (sf.a * t_grid[i]).exp();
    Eigen::VectorXd y = expm * base - sf.b;
    if (subtract_seed) y.array() -= y0;
    out.y.row(static_cast<long>(i)) = y.transpose();
  }
  return out;
}

Eigen::MatrixXd expected_shares(const ModelParams& params, const std::vector<double>& t_grid,
                                ShareConvention convention) {
  require_valid(params);
  const int n = params.levels;
  const SolvedForcing sf = solve_forcing(params, convention);
  const double y0 = seed_count(convention);
  Eigen::MatrixXd out(static_cast<long>(t_grid.size()), n);
  if (sf.rcond >= 1e-12) {
    const Eigen::VectorXd base = Eigen::VectorXd::Constant(n, y0) + sf.b;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      const Eigen::MatrixXd expm = (sf.a * t_grid[i]).exp();
      out.row(static_cast<long>(i)) = (expm * base - sf.b).transpose();
    }
    return out;
  }
  // Near-singular generator: integrate y' = A y + (lambda+nu) k instead.
  std::vector<std::size_t> order(t_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return t_grid[a] < t_grid[b]; });
  const Eigen::VectorXd g = forcing(params, convention);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(n, y0);
  double t = 0.0;
  const double h = 1e-3;
  auto deriv = [&](const Eigen::VectorXd& v) { return (sf.a * v + g).eval(); };
  for (const std::size_t idx : order) {
    const double target = t_grid[idx];
    if (target < 0.0) throw config_error("bad-time-grid", "times must be nonnegative");
    while (t < target - 1e-15) {
      const double step = std::min(h, target - t);
      const Eigen::VectorXd k1 = deriv(y);
      const Eigen::VectorXd k2 = deriv(y + 0.5 * step * k1);
      const Eigen::VectorXd k3 = deriv(y + 0.5 * step * k2);
      const Eigen::VectorXd k4 = deriv(y + step * k3);
      y += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += step;
    }
    out.row(static_cast<long>(idx)) = y.transpose();
  }
  return out;
}

ViralAsymptote viral_asymptote(const ModelParams& params, ShareConvention convention) {
  require_valid(params);
  const PerronResult spec = perron(build_single(params));
  if (spec.alpha <= 0.0)
    throw regime_error("not-viral",
                       "growth rate is nonpositive; use the sub-critical expected-shares solver");
  const SolvedForcing sf = solve_forcing(params, convention);
  if (sf.rcond < 1e-12)
    throw regime_error("ill-conditioned",
                       "generator is numerically singular (near-critical regime)");
  ViralAsymptote out;
  out.alpha = spec.alpha;
  out.convention = convention;
  out.d = -sf.b;
  const double weight =
      spec.u.dot(Eigen::VectorXd::Constant(params.levels, seed_count(convention)) + sf.b);
  out.e = spec.v * weight;
  return out;
}

NonviralShares nonviral_expected(const ModelParams& params) {
  require_valid(params);
  const int n = params.levels;
  const double theta = params.theta();
  const double c = params.c_total();
  Eigen::VectorXd chain(n);  // sum_{i=0}^{N-l} theta^i r_{l+i}
  for (int l = 1; l <= n; ++l) {
    double sum = 0.0;
    for (int i = 0; l + i <= n; ++i) sum += std::pow(theta, i) * params.view(l + i);
    chain[l - 1] = sum;
  }
  NonviralShares out;
  for (int l = 1; l <= n; ++l) out.s_factor += params.rho(l) * chain[l - 1];
  out.s_factor *= c;
  if (out.s_factor >= 1.0)
    throw regime_error("not-subcritical",
                       "denominator nonpositive: not in sub-critical domain");
  out.y_rho = out.s_factor / (1.0 - out.s_factor);
  out.y = c * (1.0 + out.y_rho) * chain;
  return out;
}

GeometricLimit nonviral_geometric_limit(double theta, double batch_mean, double d1, double d2,
                                        double rho_ratio) {
  if (theta < 0.0 || theta >= 1.0 || d1 <= 0.0 || d2 <= 0.0 || d2 > 1.0 || rho_ratio < 0.0 ||
      rho_ratio >= 1.0 || batch_mean < 0.0)
    throw config_error("bad-geometric-limit",
                       "need theta in [0,1), d1 > 0, d2 in (0,1], rho in [0,1)");
  GeometricLimit out;
  out.o_mean = (1.0 - theta) * batch_mean * (1.0 - rho_ratio) * d1 * d2 /
               ((1.0 - theta * d2) * (1.0 - rho_ratio * d2));
  if (out.o_mean >= 1.0)
    throw regime_error("aggregate-supercritical", "limit aggregate factor is >= 1");
  out.y_rho = out.o_mean / (1.0 - out.o_mean);
  return out;
}

GeometricLimit no_timeline_limit(double batch_mean) {
  GeometricLimit out;
  out.o_mean = batch_mean;
  if (out.o_mean >= 1.0)
    throw regime_error("aggregate-supercritical", "limit aggregate factor is >= 1");
  out.y_rho = out.o_mean / (1.0 - out.o_mean);
  return out;
}

double o_mx_factor(const std::vector<double>& view_probs, const std::vector<double>& rho_bar,
                   double theta) {
  const int n = static_cast<int>(view_probs.size());
  double out = 0.0;
  for (int l = 1; l < n; ++l) {
    double r_chain = 0.0;
    for (int i = 0; l + i <= n - 1; ++i) r_chain += std::pow(theta, i) * view_probs[l + i - 1];
    out += rho_bar[l - 1] * r_chain;
  }
  return out;
}

double o_mx_geometric_limit(double theta, double d1, double d2, double rho_bar_ratio) {
  if (theta < 0.0 || theta >= 1.0 || d1 <= 0.0 || d2 <= 0.0 || d2 > 1.0 || rho_bar_ratio <= 0.0 ||
      rho_bar_ratio >= 1.0)
    throw config_error("bad-geometric-limit",
                       "need theta in [0,1), d1 > 0, d2 in (0,1], rho_bar in (0,1)");
  return d1 * d2 * (1.0 - rho_bar_ratio) / ((1.0 - d2 * rho_bar_ratio) * (1.0 - theta * d2));
}

namespace {

// Shared two-provider scaffolding: R_l chains, aggregates, 2x2 solve.
struct MixedChains {
  Eigen::VectorXd r_chain;  // R_l = sum_{i=0}^{N-1-l} theta^i r_{l+i}, l = 1..N-1
  double o_mx = 0.0;        // rho_bar . R
  double t_weight = 0.0;    // sum_l rho_bar_l theta^{N-l}
};

MixedChains mixed_chains(const TwoCpParams& params) {
  const int n = params.levels;
  const double theta = params.theta();
  MixedChains out;
  out.r_chain.resize(n - 1);
  for (int l = 1; l < n; ++l) {
    double sum = 0.0;
    for (int i = 0; l + i <= n - 1; ++i) sum += std::pow(theta, i) * params.view(l + i);
    out.r_chain[l - 1] = sum;
    out.o_mx += params.rho_bar[l - 1] * sum;
    out.t_weight += params.rho_bar[l - 1] * std::pow(theta, n - l);
  }
  return out;
}

// Solve (I - scale * [[1-p, p], [p, 1-p]]) x = rhs.
Eigen::Vector2d solve_mixing(double scale, double p, const Eigen::Vector2d& rhs,
                             const char* context) {
  Eigen::Matrix2d m;
  m << 1.0 - scale * (1.0 - p), -scale * p, -scale * p, 1.0 - scale * (1.0 - p);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (std::abs(det) < 1e-12)
    throw regime_error("singular-coefficient-system", context);
  return m.lu().solve(rhs);
}

}  // namespace

TwoCpCoefficients two_cp_coefficients(const TwoCpParams& params, int cp) {
  require_valid(params);
  if (cp != 1 && cp != 2) throw config_error("bad-cp", "cp must be 1 or 2");
  const int n = params.levels;
  const double rate = params.rate_total();
  const double theta = params.theta();
  const double c_j = params.c_cp(cp);
  const double c_mx = params.c_mx();
  const double eta_other = params.eta(cp == 1 ? 2 : 1);
  const double delta = params.delta;
  const double p = params.p;

  const ModelParams exclusive = params.exclusive(cp);
  const ViralAsymptote ex = viral_asymptote(exclusive, ShareConvention::PaperK);

  TwoCpCoefficients out;
  out.cp = cp;
  out.alpha_exclusive = ex.alpha;
  out.d_exclusive = ex.d;
  out.e_exclusive = ex.e;
  out.alpha_factor = rate / (rate + ex.alpha);

  const MixedChains chains = mixed_chains(params);
  out.o_mx = chains.o_mx;
  out.t_weight = chains.t_weight;
  const double c_o = c_mx * chains.o_mx;
  out.alpha_mixed = (c_o - 1.0) * rate;
  if (std::abs(c_o - 1.0) <= 1e-9)
    throw regime_error("mixed-aggregate-critical",
                       "c_mx * O_mx is at the critical value 1; waveform coefficients blow up");
  out.three_term = c_o > 1.0;
  const double af = out.alpha_factor;
  if (out.three_term && af * c_o >= 1.0 - 1e-12)
    throw regime_error("paper-open-case",
                       "three-term regime with alpha-damped c_mx * O_mx >= 1 has no known waveform");

  double d_ex_agg = 0.0, e_ex_agg = 0.0;
  for (int i = 1; i < n; ++i) {
    d_ex_agg += params.rho_bar[i - 1] * ex.d[i - 1];
    e_ex_agg += params.rho_bar[i - 1] * ex.e[i - 1];
  }
  const double d_n = ex.d[n - 1];
  const double e_n = ex.e[n - 1];

  // Aggregates: x = c_mx O_mx [[1-p, p],[p, 1-p]] x + rhs.
  const double top_feed = c_j + c_j * (delta * (1.0 - eta_other) + (1.0 - delta)) * d_ex_agg;
  const double bottom_feed = c_j * delta + c_j * delta * (1.0 - eta_other) * d_ex_agg;
  const Eigen::Vector2d d_agg =
      solve_mixing(c_o, p,
                   {top_feed * chains.o_mx + d_n * chains.t_weight, bottom_feed * chains.o_mx},
                   "constant-coefficient aggregate system is singular");
  out.d_top_agg = d_agg[0];
  out.d_bottom_agg = d_agg[1];

  const double e_ex_top = c_j * (delta * (1.0 - eta_other) + (1.0 - delta)) * e_ex_agg;
  const double e_ex_bottom = c_j * delta * (1.0 - eta_other) * e_ex_agg;
  const Eigen::Vector2d e_agg = solve_mixing(
      af * c_o, p,
      {af * (e_ex_top * chains.o_mx + e_n * chains.t_weight), af * e_ex_bottom * chains.o_mx},
      "growth-coefficient aggregate system is singular");
  out.e_top_agg = e_agg[0];
  out.e_bottom_agg = e_agg[1];

  // Back-substitution per pair level.
  const double dbar_top = top_feed + c_mx * ((1.0 - p) * d_agg[0] + p * d_agg[1]);
  const double dbar_bottom = bottom_feed + c_mx * (p * d_agg[0] + (1.0 - p) * d_agg[1]);
  const double ebar_top = e_ex_top + c_mx * ((1.0 - p) * e_agg[0] + p * e_agg[1]);
  const double ebar_bottom = e_ex_bottom + c_mx * (p * e_agg[0] + (1.0 - p) * e_agg[1]);

  out.d_top.resize(n - 1);
  out.d_bottom.resize(n - 1);
  out.e_top.resize(n - 1);
  out.e_bottom.resize(n - 1);
  out.g_top = Eigen::VectorXd::Zero(n - 1);
  out.g_bottom = Eigen::VectorXd::Zero(n - 1);
  for (int l = 1; l < n; ++l) {
    const double shift_tail = std::pow(theta, n - l);
    out.d_top[l - 1] = dbar_top * chains.r_chain[l - 1] + d_n * shift_tail;
    out.d_bottom[l - 1] = dbar_bottom * chains.r_chain[l - 1];
    out.e_top[l - 1] = af * (ebar_top * chains.r_chain[l - 1] + e_n * shift_tail);
    out.e_bottom[l - 1] = af * ebar_bottom * chains.r_chain[l - 1];
    if (out.three_term) {
      out.g_top[l - 1] = 1.0 - out.d_top[l - 1] - out.e_top[l - 1];
      out.g_bottom[l - 1] = 1.0 - out.d_bottom[l - 1] - out.e_bottom[l - 1];
    }
  }
  return out;
}

Eigen::MatrixXd two_cp_trajectory(const TwoCpCoefficients& coeffs,
                                  const std::vector<double>& t_grid) {
  const int half = static_cast<int>(coeffs.d_top.size());
  Eigen::MatrixXd out(static_cast<long>(t_grid.size()), 2 * half);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const double grow = std::exp(coeffs.alpha_exclusive * t);
    const double mix = coeffs.three_term ? std::exp(coeffs.alpha_mixed * t) : 0.0;
    for (int l = 0; l < half; ++l) {
      out(static_cast<long>(i), l) =
          coeffs.d_top[l] + coeffs.e_top[l] * grow + coeffs.g_top[l] * mix;
      out(static_cast<long>(i), half + l) =
          coeffs.d_bottom[l] + coeffs.e_bottom[l] * grow + coeffs.g_bottom[l] * mix;
    }
  }
  return out;
}

TwoCpNonviral two_cp_nonviral(const TwoCpParams& params, int cp) {
  require_valid(params);
  if (cp != 1 && cp != 2) throw config_error("bad-cp", "cp must be 1 or 2");
  const int n = params.levels;
  const double theta = params.theta();
  const double c_j = params.c_cp(cp);
  const double c_mx = params.c_mx();
  const double eta_other = params.eta(cp == 1 ? 2 : 1);
  const double delta = params.delta;
  const double p = params.p;

  TwoCpNonviral out;
  out.cp = cp;
  out.exclusive = nonviral_expected(params.exclusive(cp));

  double y_ex_agg = 0.0;
  for (int i = 1; i < n; ++i) y_ex_agg += params.rho_bar[i - 1] * out.exclusive.y[i - 1];
  const double y_n = out.exclusive.y[n - 1];

  const MixedChains chains = mixed_chains(params);
  out.c_mx_o_mx = c_mx * chains.o_mx;
  if (1.0 - out.c_mx_o_mx <= 1e-12)
    throw regime_error("mixed-aggregate-supercritical",
                       "c_mx * O_mx >= 1: mixed-pair aggregate has no finite total");

  const double b_delta = c_j * delta * (1.0 - eta_other) * (1.0 + y_ex_agg);
  const double b_no_delta = c_j * (1.0 - delta) * (1.0 + y_ex_agg);

  // Aggregates: Y = c_mx O_mx [[1-p, p],[p, 1-p]] Y + rhs (the "+1" of each
  // pair batch folds into the c_mx constant).
  const Eigen::Vector2d rhs{
      chains.t_weight * y_n + (b_no_delta + b_delta + c_mx) * chains.o_mx,
      (b_delta + c_mx) * chains.o_mx};
  const Eigen::Vector2d y_agg = solve_mixing(out.c_mx_o_mx, p, rhs,
                                             "sub-critical aggregate system is singular");
  out.y_top_agg = y_agg[0];
  out.y_bottom_agg = y_agg[1];
  out.y_mx_rho = y_agg[0] + y_agg[1];

  const double c_top = c_mx * (1.0 + (1.0 - p) * y_agg[0] + p * y_agg[1]);
  const double c_bottom = c_mx * (1.0 + p * y_agg[0] + (1.0 - p) * y_agg[1]);
  out.y_top.resize(n - 1);
  out.y_bottom.resize(n - 1);
  for (int l = 1; l < n; ++l) {
    out.y_top[l - 1] = std::pow(theta, n - l) * y_n +
                       (b_no_delta + b_delta + c_top) * chains.r_chain[l - 1];
    out.y_bottom[l - 1] = (b_delta + c_bottom) * chains.r_chain[l - 1];
  }
  return out;
}

double two_cp_nonviral_geometric_limit(const TwoCpParams& params, int cp, double d1, double d2,
                                       double rho_bar_ratio) {
  require_valid(params);
  if (cp != 1 && cp != 2) throw config_error("bad-cp", "cp must be 1 or 2");
  const double theta = params.theta();
  const double o_inf = o_mx_geometric_limit(theta, d1, d2, rho_bar_ratio);
  const double c_j = params.c_cp(cp);
  const double c_mx = params.c_mx();
  const double eta_other = params.eta(cp == 1 ? 2 : 1);
  if (1.0 - c_mx * o_inf <= 1e-12)
    throw regime_error("mixed-aggregate-supercritical",
                       "limit c_mx * O_mx >= 1: no finite total");

  const NonviralShares ex = nonviral_expected(params.exclusive(cp));
  double y_ex_agg = 0.0;
  for (int i = 1; i < params.levels; ++i) y_ex_agg += params.rho_bar[i - 1] * ex.y[i - 1];

  const double numerator =
      2.0 * c_j * params.delta * ((1.0 + y_ex_agg) * (1.0 - eta_other) + eta_other) +
      c_j * (1.0 - params.delta) * (1.0 + y_ex_agg);
  return numerator * o_inf / (1.0 - c_mx * o_inf);
}

}  // namespace vtl
