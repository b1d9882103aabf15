// Growth-rate analysis of the branching process.
//
// The expected-population dynamics are linear, d/dt E[X(t)] = E[X(t)] A, with
// generator A = (lambda+nu)(M - I) where M is the nonnegative mean offspring
// matrix. Virality is decided by the dominant eigenvalue alpha of A (the
// Perron root of M shifted and scaled): the post goes viral with positive
// probability iff alpha > 0.
#ifndef VIRALTL_SPECTRAL_HPP
#define VIRALTL_SPECTRAL_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "params.hpp"

namespace vtl {

struct GeneratorMatrix {
  Eigen::MatrixXd A;            // rate units, off-diagonals >= 0
  std::vector<TypeLabel> types; // row/column labels
  double rate_total = 0.0;      // lambda + nu

  // Mean offspring matrix M = A/(lambda+nu) + I, entrywise nonnegative.
  Eigen::MatrixXd mean_matrix() const;
};

// Single-provider generator over levels 1..N:
// A[l][k] = (lambda+nu) (c_k r_l - 1{l=k} + theta 1{k=l+1}), c_k = c rho_k.
GeneratorMatrix build_single(const ModelParams& params);

// Mixed-pair block of the two-provider chain, dimension 2(N-1), interleaved
// ordering (1,2),(2,1),(2,3),(3,2),...  Forwarded pairs keep orientation with
// probability 1-p and land at pair level i with probability rho_bar_i.
GeneratorMatrix build_mixed(const TwoCpParams& params);

// Full two-provider generator, dimension 4N-2, block upper-triangular:
// mixed pairs feed both exclusive blocks, exclusives never create pairs.
// Entries are the Jacobian of the two-provider offspring PGFs at s = 1.
GeneratorMatrix build_full(const TwoCpParams& params);

struct PerronOptions {
  double tol = 1e-13;           // Rayleigh-quotient change tolerance
  long max_iterations = 1000000;
  bool allow_reducible = false; // permit block-triangular matrices (alpha only)
};

struct PerronResult {
  double alpha = 0.0;  // dominant eigenvalue of A, rate units
  double sigma = 0.0;  // Perron root of M, = alpha/(lambda+nu) + 1
  bool irreducible = true;
  Eigen::VectorXd u;   // left eigenvector, positive; empty when reducible
  Eigen::VectorXd v;   // right eigenvector, positive, sum 1, u.dot(v) = 1
  long iterations = 0;
  double residual_u = 0.0;  // sup-norm of u^T A - alpha u^T, relative to |A|_inf |u|_inf
  double residual_v = 0.0;
};

// Power iteration on M (and its transpose) with inverse-iteration polishing.
// Reducible matrices are rejected unless opts.allow_reducible, in which case
// alpha is the maximum over the strongly connected diagonal blocks and the
// eigenvector fields stay empty.
PerronResult perron(const GeneratorMatrix& gen, const PerronOptions& opts = {});

struct PositiveRegularity {
  bool regular = false;
  int exponent = 0;  // smallest n <= dim with M^n entrywise positive, if regular
};

// Boolean powering of the sparsity pattern of M, checking exponents n <= dim.
PositiveRegularity check_positive_regular(const GeneratorMatrix& gen);

// Perron-root bounds (r.c - 1) (lambda+nu) < alpha < (r.c - 1 + theta) (lambda+nu).
std::pair<double, double> alpha_bounds(const ModelParams& params);
// Mixed-block analogue with c_mx and the pair levels 1..N-1.
std::pair<double, double> alpha_bounds_mixed(const TwoCpParams& params);

// Large-N growth rate for geometric view probabilities r_l = d1 d2^l:
// alpha -> (r.c - 1 + theta d2)(lambda+nu). Refuses if view_probs do not
// match d1 d2^l within 1e-12.
double alpha_asymptotic(const ModelParams& params, double d1, double d2);

// Growth rate without timeline structure (every wake-up views the post):
// alpha = (m eta - 1) nu.
double alpha_no_timeline(const ModelParams& params);

struct EigvecResiduals {
  double u_recursion = 0.0;  // u_l = sum_{i<l} (rho_{l-i}/rho_1)(theta/sigma)^i u_1
  double v_recursion = 0.0;  // v_l = sum_{i<=N-l} (theta/sigma)^i (r_{l+i}/r_N) v_N
  double scalar_u = 0.0;     // c_1 (r.u) = sigma u_1
  double scalar_v = 0.0;     // r_N (c.v) = sigma v_N  (row N of A v = alpha v)
};

// Residuals of the closed-form eigenvector recursions, relative to the
// eigenvector sup-norm; all should vanish for the exact Perron pair.
EigvecResiduals eigvec_residuals(const ModelParams& params, const PerronResult& perron);

struct MixedEigvecResiduals {
  double u_top_recursion = 0.0;
  double u_bottom_recursion = 0.0;
  double ratio_identity = 0.0;  // u_top(l)/u_top(1) == u_bottom(l)/u_bottom(1)
};

MixedEigvecResiduals eigvec_residuals_mixed(const TwoCpParams& params,
                                            const PerronResult& perron);

}  // namespace vtl

#endif
