// Quality-optimization tests: cost monotonicity, refinement-stable optima,
// best responses, the reference equilibrium and its collapse at high shift
// rates, and structured configuration errors.
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "extinction.hpp"
#include "optimize.hpp"
#include "shares.hpp"
#include "spectral.hpp"
#include "test_helpers.hpp"

using namespace vtl;
using vtl::testing::t3;
using vtl::testing::two_cp_base;
using vtl::testing::two_cp_subcritical;

namespace {

std::string thrown_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const VtlError& err) {
    return err.kind();
  }
  return "";
}

// Two-provider reference for the competition game: the two-level base
// instance with an influence handicap on the second provider. theta is swept
// through the shift rate.
TwoCpParams handicap(double theta) {
  TwoCpParams p = two_cp_base();
  p.lambda = theta / (1.0 - theta);
  p.nu = 1.0;
  p.w2 = 1.2;
  return p;
}

// Symmetric always-subcritical instance for the shares game.
TwoCpParams symmetric_light() {
  TwoCpParams p;
  p.levels = 2;
  p.lambda = 1.0;
  p.nu = 1.0;
  p.view_probs = {1.0, 0.5};
  p.level_probs = {1.0, 0.0};
  p.rho_bar = {1.0};
  p.friends = {FriendFamily::Poisson, 1.0};
  p.eta1 = 0.8;
  p.eta2 = 0.7;
  p.delta = 0.6;
  p.p = 0.4;
  return p;
}

}  // namespace

TEST_CASE("quality optima obey cost-benefit monotonicity") {
  const ModelParams base = t3(1.0);
  OptimizeOptions ext;
  ext.objective = Objective::ExtinctionPlusCost;

  // Free quality: extinction is nonincreasing in eta, so the best post is the
  // best possible one.
  ext.psi = 0.0;
  const ScalarOptimum free_opt = optimal_quality(base, ext);
  CHECK(free_opt.eta == doctest::Approx(1.0));
  CHECK_FALSE(free_opt.interior);
  ModelParams full = base;
  full.eta = 1.0;
  const ExtinctionResult full_ext = solve_single(full);
  double q_rho = 0.0;
  for (int l = 1; l <= base.levels; ++l) q_rho += base.rho(l) * full_ext.q[l - 1];
  CHECK(free_opt.cost == doctest::Approx(q_rho).epsilon(1e-10));

  // Prohibitive cost: stay at zero quality, where the post dies for sure.
  ext.psi = 1000.0;
  const ScalarOptimum costly = optimal_quality(base, ext);
  CHECK(costly.eta == doctest::Approx(0.0));
  CHECK(costly.cost == doctest::Approx(1.0));

  // The extinction aggregate and the growth rate are monotone in quality.
  OptimizeOptions growth;
  growth.objective = Objective::GrowthRateMinusCost;
  growth.t_eval = 3.0;
  ext.psi = 0.0;
  double prev_q = 2.0, prev_g = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 10; ++k) {
    const double eta = k / 10.0;
    const double q = objective_cost(base, ext, eta);
    CHECK(q <= prev_q + 1e-12);
    prev_q = q;
    const double g = objective_cost(base, growth, eta);
    CHECK(g <= prev_g + 1e-12);
    prev_g = g;
    // The first level is the most-viewed slot, so its extinction probability
    // bounds the placement-weighted aggregate from below.
    OptimizeOptions first = ext;
    first.aggregate = ExtinctionAggregate::FirstLevel;
    CHECK(objective_cost(base, first, eta) <= q + 1e-12);
  }
}

TEST_CASE("interior optima are refinement-stable") {
  const ModelParams base = t3(1.0);
  OptimizeOptions ext;
  ext.objective = Objective::ExtinctionPlusCost;
  ext.psi = 0.3;
  const ScalarOptimum coarse = optimal_quality(base, ext);
  CHECK(coarse.interior);
  OptimizeOptions fine = ext;
  fine.grid_step = 0.001;
  const ScalarOptimum refined = optimal_quality(base, fine);
  CHECK(std::abs(coarse.eta - refined.eta) <= 2.0 * ext.grid_step);
  CHECK(refined.cost <= coarse.cost + 1e-9);

  ModelParams sub = base;
  sub.friends.beta = 0.8;
  OptimizeOptions shares;
  shares.objective = Objective::SubcriticalSharesMinusCost;
  shares.psi = 1.0;
  const ScalarOptimum sc = optimal_quality(sub, shares);
  CHECK(sc.interior);
  OptimizeOptions shares_fine = shares;
  shares_fine.grid_step = 0.001;
  const ScalarOptimum sf = optimal_quality(sub, shares_fine);
  CHECK(std::abs(sc.eta - sf.eta) <= 2.0 * shares.grid_step);

  // Free-quality eventual shares recover the eventual-share solve at eta = 1.
  shares.psi = 0.0;
  const ScalarOptimum free_shares = optimal_quality(sub, shares);
  sub.eta = 1.0;
  CHECK(free_shares.eta == doctest::Approx(1.0));
  CHECK(free_shares.cost == doctest::Approx(-nonviral_expected(sub).y[0]).epsilon(1e-10));
}

TEST_CASE("growth-oriented quality is at least the virality-oriented one") {
  const ModelParams base = t3(1.0);
  for (double psi : {0.1, 0.3, 0.6}) {
    OptimizeOptions ext;
    ext.objective = Objective::ExtinctionPlusCost;
    ext.psi = psi;
    OptimizeOptions growth;
    growth.objective = Objective::GrowthRateMinusCost;
    growth.psi = psi;
    growth.t_eval = 3.0;
    const ScalarOptimum e = optimal_quality(base, ext);
    const ScalarOptimum g = optimal_quality(base, growth);
    INFO("psi " << psi << " extinction eta* " << e.eta << " growth eta* " << g.eta);
    CHECK(g.eta >= e.eta - 1e-9);
  }

  // Growth cost is the realized log-slope of the expected-share trajectory.
  OptimizeOptions growth;
  growth.objective = Objective::GrowthRateMinusCost;
  growth.psi = 0.25;
  growth.t_eval = 3.0;
  ModelParams full = base;
  full.eta = 1.0;
  const Eigen::MatrixXd y = expected_shares(full, {3.0}, ShareConvention::PaperK);
  CHECK(objective_cost(base, growth, 1.0) ==
        doctest::Approx(-std::log(y(0, 0)) / 3.0 + 0.25).epsilon(1e-12));
}

TEST_CASE("best responses and the reference equilibrium") {
  const TwoCpParams base = handicap(0.5);
  OptimizeOptions ext;
  ext.objective = Objective::TwoCpExtinction;

  // Free quality: the boundary response.
  ext.psi = 0.0;
  const ScalarOptimum br_free = best_response(base, ext, 2, 1.0);
  CHECK(br_free.eta == doctest::Approx(1.0 / 1.2));
  CHECK_FALSE(br_free.interior);

  // Reference equilibrium: the stronger provider saturates and the weaker one
  // sits at its influence-scaled boundary.
  ext.psi = 0.12;
  const NashResult ne = nash_equilibrium(base, ext);
  CHECK(ne.converged);
  CHECK(ne.rounds <= 5);
  CHECK(std::abs(ne.eta1 - 1.0) <= 1e-4);
  CHECK(std::abs(ne.eta2 - 1.0 / 1.2) <= 1e-4);
  CHECK(ne.cost1 == doctest::Approx(two_cp_cost(base, ext, 1, ne.eta1, ne.eta2)));
  CHECK(ne.cost2 == doctest::Approx(two_cp_cost(base, ext, 2, ne.eta2, ne.eta1)));

  // Best responses are idempotent at the equilibrium.
  CHECK(std::abs(best_response(base, ext, 1, ne.eta2).eta - ne.eta1) <= 1e-6);
  CHECK(std::abs(best_response(base, ext, 2, ne.eta1).eta - ne.eta2) <= 1e-6);

  // The deviation scan certifies the equilibrium and rejects a perturbation.
  const DeviationScan at_ne = deviation_scan(base, ext, ne.eta1, ne.eta2);
  CHECK(at_ne.certified);
  CHECK(at_ne.eps1 >= 0.0);
  CHECK(at_ne.eps1 <= 1e-3 * std::abs(at_ne.cost1) + 1e-12);
  CHECK(at_ne.eps2 <= 1e-3 * std::abs(at_ne.cost2) + 1e-12);
  const DeviationScan off = deviation_scan(base, ext, 0.7, 0.5);
  CHECK_FALSE(off.certified);
  CHECK(off.eps1 + off.eps2 > 1e-3);

  // Every start of the multi-start search lands on the same point.
  const std::vector<NashResult> all = nash_multi_start(base, ext);
  REQUIRE(all.size() == 1);
  CHECK(std::abs(all[0].eta1 - ne.eta1) <= 1e-4);
  CHECK(std::abs(all[0].eta2 - ne.eta2) <= 1e-4);
}

TEST_CASE("the weaker provider collapses at high shift rates") {
  OptimizeOptions ext;
  ext.objective = Objective::TwoCpExtinction;
  ext.psi = 0.12;

  // Before the transition both providers invest fully.
  const NashResult before = nash_equilibrium(handicap(0.70), ext);
  CHECK(std::abs(before.eta1 - 1.0) <= 1e-4);
  CHECK(std::abs(before.eta2 - 1.0 / 1.2) <= 1e-4);

  // Past the transition the handicapped provider gives up while the stronger
  // one keeps investing, and the stronger provider's extinction probability
  // drops relative to maintained competition: the benefit of a vacated field.
  const TwoCpParams late = handicap(0.78);
  const NashResult after = nash_equilibrium(late, ext);
  CHECK(std::abs(after.eta1 - 1.0) <= 1e-4);
  CHECK(after.eta2 <= 0.01);
  TwoCpParams at_ne = late;
  at_ne.eta1 = after.eta1;
  at_ne.eta2 = after.eta2;
  TwoCpParams contested = late;
  contested.eta1 = after.eta1;
  contested.eta2 = 1.0 / 1.2;
  const double q_ne = solve_two_cp(at_ne, 1).seed_pair_product();
  const double q_contested = solve_two_cp(contested, 1).seed_pair_product();
  INFO("q1 at NE " << q_ne << " vs contested " << q_contested);
  CHECK(q_ne < q_contested - 0.02);
}

TEST_CASE("shares objective matches the share solvers and respects regimes") {
  OptimizeOptions sh;
  sh.objective = Objective::TwoCpShares;
  sh.psi = 0.12;
  sh.t_eval = 2.0;

  // Viral regime: the cost is the waveform evaluated at the horizon for both
  // seed orientations, plus the quality cost.
  TwoCpParams base = handicap(0.5);
  TwoCpParams at = base;
  at.eta1 = 0.9;
  at.eta2 = 0.8;
  const TwoCpCoefficients coeffs = two_cp_coefficients(at, 1);
  const Eigen::MatrixXd y = two_cp_trajectory(coeffs, {2.0});
  const double want = -(y(0, 0) + y(0, 1)) + 0.12 * 0.81;
  CHECK(two_cp_cost(base, sh, 1, 0.9, 0.8) == doctest::Approx(want).epsilon(1e-12));

  // Subcritical regime: the cost is the eventual total for both orientations.
  TwoCpParams sub = two_cp_subcritical();
  const TwoCpNonviral totals = two_cp_nonviral(sub, 2);
  const double want_sub = -(totals.y_top[0] + totals.y_bottom[0]) +
                          0.12 * (sub.eta2 * sub.eta2);
  CHECK(two_cp_cost(sub, sh, 2, sub.eta2, sub.eta1) ==
        doctest::Approx(want_sub).epsilon(1e-12));

  // Points the waveform cannot price come back as infeasible (positive
  // infinity), never as infinitely attractive.
  const double pocket1 = two_cp_cost(base, sh, 1, 0.40, 1.0 / 1.2);
  const double pocket2 = two_cp_cost(base, sh, 1, 0.75, 1.0 / 1.2);
  CHECK(std::isinf(pocket1));
  CHECK(pocket1 > 0.0);
  CHECK(std::isinf(pocket2));
  CHECK(pocket2 > 0.0);

  // A quality pinned to the exclusive-chain critical point is refused too:
  // bisect the growth rate of provider 1's exclusive chain to the boundary.
  double lo = 0.3, hi = 0.9;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    TwoCpParams probe = base;
    probe.eta1 = mid;
    probe.eta2 = 0.8;
    PerronOptions opts;
    opts.allow_reducible = true;
    (perron(build_single(probe.exclusive(1)), opts).alpha > 0.0 ? hi : lo) = mid;
  }
  const double critical_cost = two_cp_cost(base, sh, 1, 0.5 * (lo + hi), 0.8);
  CHECK(std::isinf(critical_cost));
  CHECK(critical_cost > 0.0);

  // Despite the infeasible pockets, the best response is finite and lands at
  // the saturation boundary for this instance.
  const ScalarOptimum br = best_response(base, sh, 1, 1.0 / 1.2);
  CHECK(std::isfinite(br.cost));
  CHECK(br.eta == doctest::Approx(1.0));
}

TEST_CASE("symmetric competition is symmetric and can split") {
  OptimizeOptions sh;
  sh.objective = Objective::TwoCpShares;

  // High quality cost: unique symmetric interior equilibrium.
  sh.psi = 2.5;
  const TwoCpParams sym = symmetric_light();
  const NashResult ne = nash_equilibrium(sym, sh);
  CHECK(ne.converged);
  CHECK(ne.eta1 == doctest::Approx(ne.eta2).epsilon(1e-5));
  CHECK(ne.eta1 > 0.05);
  CHECK(ne.eta1 < 0.95);
  CHECK(deviation_scan(sym, sh, ne.eta1, ne.eta2).certified);

  // Lower cost: the symmetric game splits into a mirrored pair of asymmetric
  // equilibria (anti-coordination), and the multi-start search finds both.
  sh.psi = 2.0;
  const std::vector<NashResult> all = nash_multi_start(sym, sh);
  CHECK(all.size() >= 2);
  bool mirror_found = false;
  for (const NashResult& a : all) {
    if (!a.converged) continue;
    for (const NashResult& b : all) {
      if (std::abs(a.eta1 - b.eta2) <= 1e-4 && std::abs(a.eta2 - b.eta1) <= 1e-4 &&
          std::abs(a.eta1 - a.eta2) > 0.1) {
        mirror_found = true;
      }
    }
  }
  CHECK(mirror_found);
  for (const NashResult& a : all)
    if (a.converged) CHECK(deviation_scan(sym, sh, a.eta1, a.eta2).certified);
}

TEST_CASE("optimizer configuration errors are structured") {
  const ModelParams base = t3(1.0);
  const TwoCpParams pair = two_cp_base();

  OptimizeOptions neg;
  neg.objective = Objective::ExtinctionPlusCost;
  neg.psi = -0.1;
  CHECK(thrown_kind([&] { objective_cost(base, neg, 0.5); }) == "bad-psi");
  OptimizeOptions neg2;
  neg2.objective = Objective::TwoCpExtinction;
  neg2.psi = -0.1;
  CHECK(thrown_kind([&] { two_cp_cost(pair, neg2, 1, 0.5, 0.5); }) == "bad-psi");

  OptimizeOptions wrong;
  wrong.objective = Objective::TwoCpExtinction;
  CHECK(thrown_kind([&] { objective_cost(base, wrong, 0.5); }) == "bad-objective");
  OptimizeOptions wrong2;
  wrong2.objective = Objective::GrowthRateMinusCost;
  wrong2.t_eval = 1.0;
  CHECK(thrown_kind([&] { two_cp_cost(pair, wrong2, 1, 0.5, 0.5); }) == "bad-objective");

  OptimizeOptions bad_time;
  bad_time.objective = Objective::GrowthRateMinusCost;
  bad_time.t_eval = 0.0;
  CHECK(thrown_kind([&] { objective_cost(base, bad_time, 0.5); }) == "bad-eval-time");

  OptimizeOptions sub;
  sub.objective = Objective::SubcriticalSharesMinusCost;
  CHECK(thrown_kind([&] { objective_cost(base, sub, 0.5); }) == "not-subcritical-family");

  OptimizeOptions ok;
  ok.objective = Objective::TwoCpExtinction;
  CHECK(thrown_kind([&] { two_cp_cost(pair, ok, 0, 0.5, 0.5); }) == "bad-cp");
  CHECK(thrown_kind([&] { best_response(pair, ok, 3, 0.5); }) == "bad-cp");
}
