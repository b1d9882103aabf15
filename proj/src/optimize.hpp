#pragma once

#include <utility>
#include <vector>

#include "params.hpp"

namespace vtl {

enum class Objective {
  ExtinctionPlusCost,         // minimize extinction aggregate + psi eta^2
  GrowthRateMinusCost,        // maximize log(y_1(t))/t - psi eta^2
  SubcriticalSharesMinusCost,  // maximize eventual shares - psi eta^2
  TwoCpExtinction,            // minimize seed-pair extinction product + cost
  TwoCpShares                 // maximize expected shares at t (or eventual) - cost
};

enum class ExtinctionAggregate { Rho, FirstLevel };

struct OptimizeOptions {
  Objective objective = Objective::ExtinctionPlusCost;
  double psi = 0.0;
  double t_eval = 1.0;
  ExtinctionAggregate aggregate = ExtinctionAggregate::Rho;
  double grid_step = 0.01;
  double tol = 1e-6;
  long max_rounds = 200;  // best-response rounds for equilibrium search
};

// Everything below works in cost form: objectives phrased as maximization
// contribute with a flipped sign. Qualities that put the model outside the
// objective's domain evaluate to +infinity.
double objective_cost(const ModelParams& base, const OptimizeOptions& options, double eta);
double two_cp_cost(const TwoCpParams& base, const OptimizeOptions& options, int cp,
                   double eta_own, double eta_other);

struct ScalarOptimum {
  double eta = 0.0;
  double cost = 0.0;
  long evaluations = 0;
  bool interior = false;  // strictly inside the admissible interval
};

ScalarOptimum optimal_quality(const ModelParams& base, const OptimizeOptions& options);
ScalarOptimum best_response(const TwoCpParams& base, const OptimizeOptions& options, int cp,
                            double eta_other);

struct NashResult {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double cost1 = 0.0;
  double cost2 = 0.0;
  bool converged = false;
  long rounds = 0;
  std::vector<std::pair<double, double>> iterates;  // kept when cycling
};

NashResult nash_equilibrium(const TwoCpParams& base, const OptimizeOptions& options);
// Alternating best responses from a 3x3 grid of starts; returns the distinct
// limit points found (within 1e-4).
std::vector<NashResult> nash_multi_start(const TwoCpParams& base,
                                         const OptimizeOptions& options);

struct DeviationScan {
  double eps1 = 0.0;  // best unilateral cost improvement found for provider 1
  double eps2 = 0.0;
  double cost1 = 0.0;  // costs at the scanned point
  double cost2 = 0.0;
  bool certified = false;
};

// Scans unilateral deviations on a fine grid (default step 1e-3); the point
// is certified as an equilibrium when neither provider can improve its cost
// by more than 1e-3 of the cost magnitude.
DeviationScan deviation_scan(const TwoCpParams& base, const OptimizeOptions& options,
                             double eta1, double eta2, double step = 1e-3);

}  // namespace vtl
