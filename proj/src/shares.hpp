// Expected-share quantities: exact viral trajectories, asymptotic
// coefficients, sub-critical totals, and the two-provider coefficient systems.
#ifndef VIRALTL_SHARES_HPP
#define VIRALTL_SHARES_HPP

#include <Eigen/Dense>
#include <vector>

#include "params.hpp"

namespace vtl {

// How cumulative shares are counted.
//   Recipient: one count per recipient of a forwarded post (batch sizes).
//   PaperK:    one count per wake-up event plus one per level-N shift-out;
//              in expectation this equals seed + recipient count, and it is
//              the forcing convention of the closed-form trajectory.
enum class ShareConvention { PaperK, Recipient };

struct Trajectory {
  std::vector<double> t;
  // y(i, l-1): expected shares by time t[i] from one start TL of level l.
  Eigen::MatrixXd y;
  double alpha = 0.0;
  ShareConvention convention = ShareConvention::PaperK;
  bool seed_included = true;  // PaperK counts the seed unless subtracted
};

// Closed-form trajectory y(t) = e^{At}(1 + b) - b, b = (lambda+nu) A^{-1} k,
// where k is the forcing vector of the selected convention. Requires alpha > 0
// and a well-conditioned A. subtract_seed removes the constant seed count.
Trajectory viral_trajectory(const ModelParams& params, const std::vector<double>& t_grid,
                            ShareConvention convention = ShareConvention::PaperK,
                            bool subtract_seed = false);

// Expected-share curve in any regime: closed form when A is well conditioned,
// RK4 integration of y' = A y + (lambda+nu) k otherwise. Used by optimizers
// that scan across the critical boundary.
Eigen::MatrixXd expected_shares(const ModelParams& params, const std::vector<double>& t_grid,
                                ShareConvention convention = ShareConvention::PaperK);

struct ViralAsymptote {
  double alpha = 0.0;
  Eigen::VectorXd d;  // y_l(t) - e_l e^{alpha t} -> d_l
  Eigen::VectorXd e;  // e_l = v_l * (u . (1 + b)), u.v = 1
  ShareConvention convention = ShareConvention::PaperK;
};

ViralAsymptote viral_asymptote(const ModelParams& params,
                               ShareConvention convention = ShareConvention::PaperK);

struct NonviralShares {
  Eigen::VectorXd y;      // expected eventual shares per start level, seed excluded
  double y_rho = 0.0;     // rho-weighted aggregate
  double s_factor = 0.0;  // c * sum_l rho_l sum_i theta^i r_{l+i}, must be < 1
};

// Sub-critical expected eventual shares:
// y_l = c (1 + y.rho) sum_{i=0}^{N-l} theta^i r_{l+i}, c = (1-theta) m eta.
NonviralShares nonviral_expected(const ModelParams& params);

struct GeometricLimit {
  double o_mean = 0.0;  // aggregate factor; y.rho = o/(1-o)
  double y_rho = 0.0;
};

// N -> infinity aggregate for r_l = d1 d2^l, rho_l proportional to rho^l:
// o = (1-theta) batch_mean (1-rho) d1 d2 / ((1-theta d2)(1-rho d2)).
GeometricLimit nonviral_geometric_limit(double theta, double batch_mean, double d1, double d2,
                                        double rho_ratio);

// Degenerate comparison model (infinite levels, r = 1): o = batch mean.
GeometricLimit no_timeline_limit(double batch_mean);

// Two-provider waveform coefficients for the tracked provider's expected
// shares from mixed starts: y(t) = d + e exp(alpha_ex t) + g exp(alpha_mx t),
// with g = 0 in the two-term regime c_mx O_mx < 1.
struct TwoCpCoefficients {
  int cp = 1;
  double alpha_exclusive = 0.0;  // growth rate of the tracked exclusive chain
  double alpha_mixed = 0.0;      // alpha* = (c_mx O_mx - 1)(lambda+nu)
  bool three_term = false;       // c_mx O_mx > 1
  double o_mx = 0.0;             // sum_l rho_bar_l R_l
  double t_weight = 0.0;         // sum_l rho_bar_l theta^{N-l}
  double alpha_factor = 0.0;     // (lambda+nu)/(lambda+nu+alpha_exclusive)
  // Aggregates over rho_bar: top = tracked post above the competitor's.
  double d_top_agg = 0.0, d_bottom_agg = 0.0;
  double e_top_agg = 0.0, e_bottom_agg = 0.0;
  // Per pair level 1..N-1.
  Eigen::VectorXd d_top, d_bottom, e_top, e_bottom, g_top, g_bottom;
  Eigen::VectorXd d_exclusive, e_exclusive;  // tracked exclusive chain, levels 1..N
};

TwoCpCoefficients two_cp_coefficients(const TwoCpParams& params, int cp);

// Evaluate the coefficient waveform on a time grid; columns are the 2(N-1)
// mixed starts ordered top_1..top_{N-1}, bottom_1..bottom_{N-1}.
Eigen::MatrixXd two_cp_trajectory(const TwoCpCoefficients& coeffs,
                                  const std::vector<double>& t_grid);

struct TwoCpNonviral {
  int cp = 1;
  Eigen::VectorXd y_top, y_bottom;  // per pair level 1..N-1, tracked post's shares
  double y_top_agg = 0.0, y_bottom_agg = 0.0;  // rho_bar-weighted
  double y_mx_rho = 0.0;                       // y_top_agg + y_bottom_agg
  NonviralShares exclusive;                    // tracked exclusive inputs
  double c_mx_o_mx = 0.0;
};

// Sub-critical expected eventual shares of the tracked provider from mixed
// starts. Requires the tracked exclusive chain sub-critical and c_mx O_mx < 1.
TwoCpNonviral two_cp_nonviral(const TwoCpParams& params, int cp);

// O_mx = sum_{l<N} rho_bar_l sum_{i=0}^{N-l-1} theta^i r_{l+i}.
double o_mx_factor(const std::vector<double>& view_probs, const std::vector<double>& rho_bar,
                   double theta);

// N -> infinity limit of O_mx for r_l = d1 d2^l, rho_bar_l prop. rho_bar^l.
double o_mx_geometric_limit(double theta, double d1, double d2, double rho_bar_ratio);

// N -> infinity display of y_mx.rho_bar for the geometric special case; y_ex_rho
// is the tracked exclusive aggregate y_ex . rho_bar (finite-N input converges).
double two_cp_nonviral_geometric_limit(const TwoCpParams& params, int cp, double d1, double d2,
                                       double rho_bar_ratio);

}  // namespace vtl

#endif
