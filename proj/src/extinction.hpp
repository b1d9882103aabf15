// Extinction probabilities: the chance a post's spread eventually dies out.
//
// The per-start-type extinction vector q is the minimal fixed point of the
// offspring PGF system h(q) = q on [0,1]^dim, reached by iterating from the
// zero vector. q = 1 exactly when the growth rate alpha is <= 0.
#ifndef VIRALTL_EXTINCTION_HPP
#define VIRALTL_EXTINCTION_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "params.hpp"

namespace vtl {

// |alpha| <= band * (lambda+nu) is treated as numerically critical.
inline constexpr double kCriticalBand = 1e-6;

struct ExtinctionResult {
  Eigen::VectorXd q;        // per level 1..N
  double alpha = 0.0;
  long iterations = 0;
  double residual = 0.0;               // sup-norm of h(q) - q
  double level_relation_residual = 0.0;  // chain relation between q_{N-l} and q_N
  bool critical_indeterminate = false;
};

// Single-provider extinction. Subcritical and critical regimes return exactly
// ones; within the critical band the result is flagged indeterminate.
ExtinctionResult solve_single(const ModelParams& params);

// Residual of the closed-form chain relation
// q_{N-l} = (q_N - 1) sum_{i=0}^{l} theta^{l-i} r_{N-i}/r_N + 1, 1 <= l < N.
double level_relation_residual(const ModelParams& params, const Eigen::VectorXd& q);

struct TwoCpExtinctionResult {
  int cp = 1;
  Eigen::VectorXd q_exclusive;      // stage 1: exclusive TLs of the tracked provider
  Eigen::VectorXd q_top_tracked;    // pair level l, tracked post on top
  Eigen::VectorXd q_bottom_tracked; // pair level l, tracked post below
  double alpha_exclusive = 0.0;
  long iterations = 0;
  double residual = 0.0;
  bool exclusive_subcritical = false;
  std::vector<std::string> warnings;
  // Pair-level-1 product: extinction of one (1,2) plus one (2,1) seed.
  double seed_pair_product() const { return q_top_tracked[0] * q_bottom_tracked[0]; }
};

// Two-provider extinction of provider `cp`, in two stages: first the exclusive
// chain (single-provider with eta_cp), then the mixed-pair system obtained by
// conditioning the two-provider PGFs on the first transition, with the other
// provider's exclusive coordinates pinned to 1. If the exclusive chain is
// subcritical the tracked post dies out from every start (all-ones), which
// relies on rho_bar matching level_probs and rho_N = 0; a warning is attached
// when that assumption does not hold.
TwoCpExtinctionResult solve_two_cp(const TwoCpParams& params, int cp);

struct KConstants {
  std::vector<double> k1, k2, k3;  // index l-1 for level l = 1..N
};

// Aggregated view/no-view weights of the shift chain starting at level l:
// K2_l = (1-theta) sum_{i=0}^{N-l-1} theta^i r_{l+i}, K1_l = delta K2_l,
// K3_l = (1-theta) sum_{i=0}^{N-l-1} theta^i (1 - r_{l+i});
// theta^{N-l} + K1_l + K2_l (1-delta) + K3_l = 1 for every l.
KConstants k_constants(const std::vector<double>& view_probs, double theta, double delta);

}  // namespace vtl

#endif
