// Monte Carlo engine tests: step moments against the mean offspring matrix,
// the exponential event clock, extinction-probability brackets, the stopped
// martingale statistic, and bit-for-bit determinism of ensembles.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "extinction.hpp"
#include "shares.hpp"
#include "simulate.hpp"
#include "spectral.hpp"
#include "test_helpers.hpp"

using namespace vtl;
using vtl::testing::t3;
using vtl::testing::two_cp_base;
using vtl::testing::two_cp_three_term;

namespace {

std::string thrown_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const VtlError& err) {
    return err.kind();
  }
  return "";
}

// Mean and standard error of a sample accumulated as (sum, sum of squares).
struct Moment {
  double sum = 0.0;
  double sumsq = 0.0;
  long n = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  double mean() const { return sum / n; }
  double stderror() const {
    const double m = mean();
    const double var = std::max(sumsq / n - m * m, 0.0);
    return std::sqrt(var / n);
  }
};

// |observed - expected| within z standard errors (with a small floor so
// zero-variance entries still compare exactly).
void check_mean(const Moment& obs, double expected, double z, const char* what) {
  INFO(what << ": mean " << obs.mean() << " expected " << expected << " se "
            << obs.stderror());
  CHECK(std::abs(obs.mean() - expected) <= z * obs.stderror() + 1e-9);
}

// Pure death chain: no view ever produces a share, so a level-l individual
// performs at most N-l+1 transitions before the post dies.
ModelParams death_chain() {
  ModelParams p;
  p.levels = 4;
  p.lambda = 1.5;
  p.nu = 1.0;
  p.eta = 0.0;
  p.view_probs = {1.0, 0.8, 0.6, 0.4};
  p.level_probs = {0.25, 0.25, 0.25, 0.25};
  p.friends = {FriendFamily::Poisson, 3.0};
  return p;
}

TwoCpParams two_cp_deep() {
  TwoCpParams p;
  p.levels = 3;
  p.lambda = 1.0;
  p.nu = 1.0;
  p.view_probs = {1.0, 0.5, 0.2};
  p.level_probs = {0.6, 0.4, 0.0};
  p.rho_bar = {0.6, 0.4};
  p.friends = {FriendFamily::Poisson, 4.0};
  p.eta1 = 0.9;
  p.eta2 = 0.8;
  p.delta = 0.35;
  p.p = 0.25;
  return p;
}

}  // namespace

TEST_CASE("ensembles are deterministic and replication-indexed") {
  const ModelParams params = t3(1.0);
  SimConfig cfg;
  cfg.replications = 400;
  cfg.master_seed = 99;
  cfg.horizon = 2.5;
  cfg.pop_cap = 20000;
  cfg.checkpoints = {1.0, 2.0};

  const EnsembleResult e1 = run_ensemble(params, cfg);
  const EnsembleResult e2 = run_ensemble(params, cfg);
  CHECK(e1.extinct_fraction == e2.extinct_fraction);
  CHECK(e1.mean_extinction_time == e2.mean_extinction_time);
  CHECK(e1.growth_rate_fit == e2.growth_rate_fit);
  CHECK(e1.clipped == e2.clipped);
  REQUIRE(e1.checkpoints.size() == 2);
  for (std::size_t j = 0; j < e1.checkpoints.size(); ++j) {
    CHECK(e1.checkpoints[j].mean_cp1 == e2.checkpoints[j].mean_cp1);
    CHECK(e1.checkpoints[j].half_width_cp1 == e2.checkpoints[j].half_width_cp1);
    CHECK(e1.checkpoints[j].frozen == e2.checkpoints[j].frozen);
    CHECK(e1.checkpoints[j].t == doctest::Approx(cfg.checkpoints[j]));
  }

  // One replication stream depends only on (master seed, index).
  const ReplicationResult r7a = run_replication(params, cfg, 7);
  const ReplicationResult r7b = run_replication(params, cfg, 7);
  CHECK(r7a.outcome == r7b.outcome);
  CHECK(r7a.stop_time == r7b.stop_time);
  CHECK(r7a.events == r7b.events);
  CHECK(r7a.shares_cp1_at == r7b.shares_cp1_at);
  CHECK(r7a.final_counts == r7b.final_counts);

  // The ensemble is exactly the aggregate of its replications.
  double share_sum = 0.0;
  long extinct = 0;
  for (long rep = 0; rep < cfg.replications; ++rep) {
    const ReplicationResult r = run_replication(params, cfg, rep);
    share_sum += r.shares_cp1_at[1];
    if (r.outcome == RunOutcome::Extinct) ++extinct;
  }
  CHECK(e1.checkpoints[1].mean_cp1 ==
        doctest::Approx(share_sum / cfg.replications).epsilon(1e-12));
  CHECK(e1.extinct_fraction ==
        doctest::Approx(static_cast<double>(extinct) / cfg.replications));

  // A prefix ensemble reuses the same per-replication streams.
  SimConfig small = cfg;
  small.replications = 100;
  const EnsembleResult e3 = run_ensemble(params, small);
  double share_sum_small = 0.0;
  for (long rep = 0; rep < 100; ++rep)
    share_sum_small += run_replication(params, cfg, rep).shares_cp1_at[1];
  CHECK(e3.checkpoints[1].mean_cp1 ==
        doctest::Approx(share_sum_small / 100).epsilon(1e-12));

  SimConfig other = cfg;
  other.master_seed = 100;
  const EnsembleResult e4 = run_ensemble(params, other);
  const bool differs = e4.extinct_fraction != e1.extinct_fraction ||
                       e4.checkpoints[1].mean_cp1 != e1.checkpoints[1].mean_cp1;
  CHECK(differs);

  // Two-provider ensembles are deterministic too.
  SimConfig cfg2 = cfg;
  cfg2.replications = 200;
  cfg2.pop_cap = 5000;
  const EnsembleResult t1 = run_ensemble(two_cp_base(), cfg2);
  const EnsembleResult t2 = run_ensemble(two_cp_base(), cfg2);
  CHECK(t1.extinct_fraction == t2.extinct_fraction);
  CHECK(t1.checkpoints[1].mean_cp2 == t2.checkpoints[1].mean_cp2);
}

TEST_CASE("single-provider steps match the mean offspring matrix") {
  Rng seeder(31001);
  const std::vector<ModelParams> instances = {t3(0.6),
                                              vtl::testing::random_single(seeder, 4)};
  for (const ModelParams& params : instances) {
    const GeneratorMatrix gen = build_single(params);
    const Eigen::MatrixXd mean = gen.mean_matrix();
    const double theta = params.theta();
    const long trials = 120000;
    for (int level = 1; level <= params.levels; ++level) {
      Rng rng(9000 + level);
      std::vector<Moment> offspring(params.levels);
      Moment shares, paper;
      for (long i = 0; i < trials; ++i) {
        const StepOutcome out = step_single(params, level, rng);
        long long total = 0;
        for (int k = 0; k < params.levels; ++k) {
          offspring[k].add(static_cast<double>(out.offspring[k]));
          total += out.offspring[k];
        }
        shares.add(out.shares_cp1);
        paper.add(out.paper_k);
        // A step sheds at most one non-share offspring (the level shift).
        CHECK(total - static_cast<long long>(out.shares_cp1) <= 1);
        CHECK(out.shares_cp2 == 0.0);
        CHECK((out.paper_k == 0.0 || out.paper_k == 1.0));
      }
      for (int k = 0; k < params.levels; ++k)
        check_mean(offspring[k], mean(level - 1, k), 3.6, "offspring mean");
      const double view = params.view_probs[level - 1];
      check_mean(shares, (1.0 - theta) * view * params.friends.batch_mean(params.eta),
                 3.6, "share count per step");
      const double paper_expected = (1.0 - theta) + (level == params.levels ? theta : 0.0);
      check_mean(paper, paper_expected, 3.6, "wake-up counter per step");
    }
  }
}

TEST_CASE("two-provider steps match the full generator") {
  const std::vector<TwoCpParams> instances = {two_cp_base(), two_cp_three_term(),
                                              two_cp_deep()};
  for (const TwoCpParams& params : instances) {
    const GeneratorMatrix gen = build_full(params);
    const Eigen::MatrixXd mean = gen.mean_matrix();
    const TwoCpOrder order(params.levels);
    const double theta = params.theta();
    const double mbar1 = params.friends.batch_mean(params.eta1);
    const double mbar2 = params.friends.batch_mean(params.eta2);
    const long trials = 80000;
    for (int type = 0; type < order.dim(); ++type) {
      Rng rng(77000 + type);
      std::vector<Moment> offspring(order.dim());
      Moment cp1, cp2, paper;
      for (long i = 0; i < trials; ++i) {
        const StepOutcome out = step_two_cp(params, type, rng);
        for (int k = 0; k < order.dim(); ++k)
          offspring[k].add(static_cast<double>(out.offspring[k]));
        cp1.add(out.shares_cp1);
        cp2.add(out.shares_cp2);
        paper.add(out.paper_k);
      }
      for (int k = 0; k < order.dim(); ++k)
        check_mean(offspring[k], mean(type, k), 3.8, "offspring mean");

      // Expected share counts per transition, by type kind: the provider on
      // top is always shared on a view, the bottom one only when the batch
      // receives both posts.
      const int mixed = order.mixed_count();
      double view = 0.0, want1 = 0.0, want2 = 0.0;
      if (type < mixed) {
        const int pair_level = type / 2 + 1;
        view = params.view_probs[pair_level - 1];
        const bool cp1_on_top = (type % 2) == 0;
        if (cp1_on_top) {
          want1 = (1.0 - theta) * view * mbar1;
          want2 = (1.0 - theta) * view * params.delta * mbar2;
        } else {
          want1 = (1.0 - theta) * view * params.delta * mbar1;
          want2 = (1.0 - theta) * view * mbar2;
        }
      } else if (type < mixed + params.levels) {
        view = params.view_probs[type - mixed];
        want1 = (1.0 - theta) * view * mbar1;
      } else {
        view = params.view_probs[type - mixed - params.levels];
        want2 = (1.0 - theta) * view * mbar2;
      }
      check_mean(cp1, want1, 3.8, "provider-1 shares per step");
      check_mean(cp2, want2, 3.8, "provider-2 shares per step");
      CHECK(paper.sum == 0.0);
    }
  }
}

TEST_CASE("event clock is exponential and the death chain lifetime matches") {
  // With eta = 0 no share is ever produced, so a lone seed dies at its first
  // wake-up or after shifting off the last level.
  ModelParams one;
  one.levels = 1;
  one.lambda = 0.8;
  one.nu = 1.2;
  one.eta = 0.0;
  one.view_probs = {1.0};
  one.level_probs = {1.0};
  one.friends = {FriendFamily::Poisson, 2.0};

  // N = 1: any first event kills the post, so the lifetime is exactly
  // exponential with the total event rate.
  CHECK(death_chain_mean_time(one, 1) == doctest::Approx(0.5).epsilon(1e-12));

  SimConfig cfg;
  cfg.replications = 20000;
  cfg.master_seed = 424242;
  cfg.horizon = 100.0;
  const long n = cfg.replications;
  std::vector<double> times;
  times.reserve(n);
  Moment lifetime;
  for (long rep = 0; rep < n; ++rep) {
    const ReplicationResult r = run_replication(one, cfg, rep);
    REQUIRE(r.outcome == RunOutcome::Extinct);
    CHECK(r.events == 1);
    times.push_back(r.extinction_time);
    lifetime.add(r.extinction_time);
  }
  check_mean(lifetime, 0.5, 3.6, "exponential lifetime mean");

  // Kolmogorov-Smirnov against Exp(rate), well beyond the 99.9% quantile.
  std::sort(times.begin(), times.end());
  const double rate = one.rate_total();
  double dstat = 0.0;
  for (long i = 0; i < n; ++i) {
    const double f = 1.0 - std::exp(-rate * times[i]);
    dstat = std::max(dstat, std::abs(f - static_cast<double>(i) / n));
    dstat = std::max(dstat, std::abs(static_cast<double>(i + 1) / n - f));
  }
  const double scaled = dstat * (std::sqrt(static_cast<double>(n)) + 0.12 +
                                 0.11 / std::sqrt(static_cast<double>(n)));
  INFO("KS statistic " << dstat << " scaled " << scaled);
  CHECK(scaled <= 1.95);

  // Deeper chain: mean lifetime of a level-l start is the geometric sum of
  // expected holding times over the remaining shift ladder.
  const ModelParams chain = death_chain();
  const double theta = chain.theta();
  CHECK(death_chain_mean_time(chain, 4) == doctest::Approx(1.0 / chain.rate_total()));
  CHECK(death_chain_mean_time(chain, 3) ==
        doctest::Approx((1.0 + theta) / chain.rate_total()));
  for (int start_level : {1, 3}) {
    SimConfig deep;
    deep.replications = 20000;
    deep.master_seed = 5150 + start_level;
    deep.horizon = 200.0;
    deep.checkpoints = {150.0};
    deep.start.assign(chain.levels, 0);
    deep.start[start_level - 1] = 1;
    Moment mean_time;
    for (long rep = 0; rep < deep.replications; ++rep) {
      const ReplicationResult r = run_replication(chain, deep, rep);
      REQUIRE(r.outcome == RunOutcome::Extinct);
      CHECK(r.events >= 1);
      CHECK(r.events <= chain.levels - start_level + 1);
      CHECK(r.extinction_time == doctest::Approx(r.stop_time));
      CHECK(r.shares_cp1_at[0] == 0.0);
      CHECK(r.paper_k_at[0] == 1.0);  // exactly one wake-up or terminal shift
      mean_time.add(r.extinction_time);
    }
    check_mean(mean_time, death_chain_mean_time(chain, start_level), 3.6,
               "death chain mean lifetime");
  }
}

TEST_CASE("ensemble extinction brackets the fixed point") {
  // Supercritical reference: the extinct fraction brackets the analytic
  // extinction probability for each start level.
  const ModelParams params = t3(0.6);
  const ExtinctionResult ext = solve_single(params);
  REQUIRE(ext.alpha > 0.0);
  for (int start_level : {1, 3}) {
    SimConfig cfg;
    cfg.replications = 10000;
    cfg.master_seed = 20260819 + start_level;
    cfg.horizon = 50.0;
    cfg.pop_cap = 2000;
    cfg.checkpoints = {1.0, 5.0};
    cfg.start.assign(params.levels, 0);
    cfg.start[start_level - 1] = 1;
    const EnsembleResult ens = run_ensemble(params, cfg);
    const double q = ext.q[start_level - 1];
    const double sigma = std::sqrt(q * (1.0 - q) / cfg.replications);
    INFO("start level " << start_level << " bracket [" << ens.bracket_low << ", "
                        << ens.bracket_high << "] q " << q);
    CHECK(ens.bracket_low - 3.3 * sigma <= q);
    CHECK(q <= ens.bracket_high + 3.3 * sigma);
    CHECK(ens.bracket_low == doctest::Approx(ens.extinct_fraction));
    CHECK(ens.bracket_high ==
          doctest::Approx(ens.extinct_fraction + ens.horizon_alive_fraction));
    CHECK(ens.extinct_fraction + ens.cap_fraction + ens.horizon_alive_fraction ==
          doctest::Approx(1.0));
    CHECK(ens.horizon_alive_fraction <= 0.02);
    CHECK_FALSE(ens.undecided_flagged);
    CHECK(ens.mean_extinction_time > 0.0);
    // Single post: the post is gone exactly when the replication is extinct.
    REQUIRE(ens.post_extinct_fraction.size() == 1);
    CHECK(ens.post_extinct_fraction[0] == doctest::Approx(ens.extinct_fraction));
    CHECK(ens.post_alive_fraction[0] ==
          doctest::Approx(1.0 - ens.extinct_fraction));
    CHECK(ens.clipped == std::lround(ens.cap_fraction * cfg.replications));
  }

  // Subcritical reference: everything dies and the late-time mean share count
  // matches the eventual-shares solve, under both counting conventions.
  const ModelParams sub = t3(0.2);
  const NonviralShares totals = nonviral_expected(sub);
  SimConfig cfg;
  cfg.replications = 10000;
  cfg.master_seed = 8088;
  cfg.horizon = 60.0;
  cfg.checkpoints = {50.0};
  const EnsembleResult ens = run_ensemble(sub, cfg);
  CHECK(ens.extinct_fraction >= 0.999);
  CHECK(ens.bracket_high >= 0.999);
  CHECK(1.0 <= ens.bracket_high + 3.3 * ens.extinct_half_width / 1.96 + 1e-6);
  const CheckpointStats& late = ens.checkpoints[0];
  INFO("mean shares " << late.mean_cp1 << " +- " << late.half_width_cp1
                      << " expected " << totals.y[0]);
  CHECK(std::abs(late.mean_cp1 - totals.y[0]) <= 1.75 * late.half_width_cp1 + 1e-4);
  // Every individual dies by exactly one wake-up or terminal shift, so on an
  // extinct path the wake-up counter equals the share count plus the seed:
  // the two counting conventions differ by exactly one unit in expectation.
  CHECK(std::abs(late.mean_paper_k - (1.0 + totals.y[0])) <=
        1.75 * late.half_width_paper_k + 1e-4);
  CHECK(std::abs(late.mean_paper_k - late.mean_cp1 - 1.0) <= 0.02);
}

TEST_CASE("weighted statistic is a stopped martingale") {
  const ModelParams params = t3(1.0);
  const PerronResult pr = perron(build_single(params));
  REQUIRE(pr.alpha > 0.0);
  SimConfig cfg;
  cfg.replications = 20000;
  cfg.master_seed = 314159;
  cfg.horizon = 3.05;
  cfg.pop_cap = 50000;
  cfg.checkpoints = {0.75, 1.5, 2.25, 3.0};
  cfg.stat_weights.assign(pr.v.data(), pr.v.data() + pr.v.size());
  cfg.stat_alpha = pr.alpha;
  const EnsembleResult ens = run_ensemble(params, cfg);
  const double w0 = pr.v[0];  // statistic of the level-1 seed at time zero
  for (const CheckpointStats& cp : ens.checkpoints) {
    INFO("t " << cp.t << " mean " << cp.mean_stat << " +- " << cp.half_width_stat
              << " start value " << w0);
    CHECK(cp.mean_stat > 0.0);
    CHECK(std::abs(cp.mean_stat - w0) <= 1.75 * cp.half_width_stat + 1e-9);
  }
  for (std::size_t j = 1; j < ens.checkpoints.size(); ++j)
    CHECK(ens.checkpoints[j].frozen >= ens.checkpoints[j - 1].frozen);
}

TEST_CASE("growth rate fit and mean trajectory track the linear dynamics") {
  const ModelParams params = t3(1.0);
  const PerronResult pr = perron(build_single(params));
  SimConfig cfg;
  cfg.replications = 6000;
  cfg.master_seed = 271828;
  cfg.horizon = 4.55;
  cfg.pop_cap = 100000;
  cfg.checkpoints = {2.0, 2.5, 3.0, 3.5, 4.0, 4.5};
  const EnsembleResult ens = run_ensemble(params, cfg);
  INFO("recipient-counter growth fit " << ens.growth_rate_fit << " alpha "
                                       << pr.alpha);
  CHECK(std::abs(ens.growth_rate_fit - pr.alpha) <= 0.12 * pr.alpha);

  // Mean counted shares follow the closed-form expected trajectory.
  const Trajectory traj =
      viral_trajectory(params, cfg.checkpoints, ShareConvention::Recipient);
  for (std::size_t j = 0; j < cfg.checkpoints.size(); ++j) {
    const CheckpointStats& cp = ens.checkpoints[j];
    const double want = traj.y(j, 0);
    INFO("t " << cp.t << " mean " << cp.mean_cp1 << " +- " << cp.half_width_cp1
              << " expected " << want);
    CHECK(std::abs(cp.mean_cp1 - want) <= 1.9 * cp.half_width_cp1 + 1e-3);
  }

  // The wake-up counter fits the same rate.
  SimConfig alt = cfg;
  alt.convention = ShareConvention::PaperK;
  const EnsembleResult ens2 = run_ensemble(params, alt);
  INFO("wake-up-counter growth fit " << ens2.growth_rate_fit);
  CHECK(std::abs(ens2.growth_rate_fit - pr.alpha) <= 0.12 * pr.alpha);
}

TEST_CASE("two-provider bookkeeping separates the posts") {
  // delta = 0: a pair only ever propagates the post on top. Starting from a
  // single provider-1-on-top pair, provider 2 is never shared and its post is
  // gone once the seed pair resolves.
  TwoCpParams params = two_cp_base();
  params.delta = 0.0;
  const TwoCpOrder order(params.levels);
  SimConfig cfg;
  cfg.replications = 2000;
  cfg.master_seed = 606;
  cfg.horizon = 25.0;
  cfg.pop_cap = 3000;
  cfg.checkpoints = {2.0, 20.0};
  cfg.start.assign(order.dim(), 0);
  cfg.start[order.top(1)] = 1;
  const EnsembleResult ens = run_ensemble(params, cfg);
  REQUIRE(ens.post_extinct_fraction.size() == 2);
  CHECK(ens.checkpoints[0].mean_cp2 == 0.0);
  CHECK(ens.checkpoints[1].mean_cp2 == 0.0);
  CHECK(ens.checkpoints[1].mean_cp1 > 0.0);
  CHECK(ens.post_extinct_fraction[1] >= 0.999);
  CHECK(ens.post_alive_fraction[1] <= 0.001);
  long cp2_dead = 0;
  for (long rep = 0; rep < 200; ++rep) {
    const ReplicationResult r = run_replication(params, cfg, rep);
    for (double s : r.shares_cp2_at) CHECK(s == 0.0);
    for (double k : r.paper_k_at) CHECK(k == 0.0);
    if (!r.cp2_alive) ++cp2_dead;
  }
  CHECK(cp2_dead >= 199);

  // The documented default start is one seed pair of each orientation.
  SimConfig explicit_cfg = cfg;
  explicit_cfg.start.assign(order.dim(), 0);
  explicit_cfg.start[order.top(1)] = 1;
  explicit_cfg.start[order.bottom(1)] = 1;
  SimConfig default_cfg = cfg;
  default_cfg.start.clear();
  const TwoCpParams base = two_cp_base();
  const ReplicationResult re = run_replication(base, explicit_cfg, 3);
  const ReplicationResult rd = run_replication(base, default_cfg, 3);
  CHECK(re.outcome == rd.outcome);
  CHECK(re.stop_time == rd.stop_time);
  CHECK(re.events == rd.events);
  CHECK(re.shares_cp1_at == rd.shares_cp1_at);
  CHECK(re.shares_cp2_at == rd.shares_cp2_at);
  CHECK(re.final_counts == rd.final_counts);
}

TEST_CASE("replication bookkeeping freezes at the stop time") {
  const ModelParams sub = t3(0.2);
  SimConfig cfg;
  cfg.replications = 301;
  cfg.master_seed = 1234;
  cfg.horizon = 45.0;
  cfg.checkpoints = {0.5, 40.0};
  cfg.stat_weights = {1.0, 1.0, 1.0};  // population size, undiscounted
  cfg.stat_alpha = 0.0;
  long extinct = 0;
  for (long rep = 0; rep < cfg.replications; ++rep) {
    const ReplicationResult r = run_replication(sub, cfg, rep);
    CHECK(r.stop_time <= cfg.horizon + 1e-9);
    CHECK(r.events >= 1);
    CHECK(r.shares_cp1_at.size() == 2);
    CHECK(r.shares_cp1_at[0] <= r.shares_cp1_at[1]);
    CHECK(r.cp1_alive == (r.outcome != RunOutcome::Extinct));
    if (r.outcome == RunOutcome::Extinct) {
      ++extinct;
      CHECK(r.extinction_time == doctest::Approx(r.stop_time));
      for (long long c : r.final_counts) CHECK(c == 0);
      if (r.extinction_time < 40.0) CHECK(r.stat_at[1] == 0.0);
    }
  }
  CHECK(extinct >= 300);  // subcritical: survival past the horizon is rare

  // Frozen counts replications whose statistic stopped early at the cap: a
  // capless subcritical run has none, a tightly capped supercritical run has
  // one per clipped replication once the cap time has passed.
  SimConfig ens_cfg = cfg;
  ens_cfg.replications = 500;
  const EnsembleResult ens = run_ensemble(sub, ens_cfg);
  CHECK(ens.checkpoints[0].frozen == 0);
  CHECK(ens.checkpoints[1].frozen == 0);

  SimConfig capped;
  capped.replications = 300;
  capped.master_seed = 55;
  capped.horizon = 6.0;
  capped.pop_cap = 50;
  capped.checkpoints = {0.5, 5.9};
  const EnsembleResult hit = run_ensemble(t3(1.0), capped);
  CHECK(hit.clipped > 0);
  CHECK(hit.checkpoints[0].frozen <= hit.checkpoints[1].frozen);
  CHECK(hit.checkpoints[1].frozen <= hit.clipped);
  CHECK(hit.checkpoints[1].frozen >= (hit.clipped * 8) / 10);
}

TEST_CASE("simulation configuration errors are structured") {
  const ModelParams params = t3(0.6);
  SimConfig cfg;
  cfg.checkpoints = {1.0};

  SimConfig bad_reps = cfg;
  bad_reps.replications = 0;
  CHECK(thrown_kind([&] { run_ensemble(params, bad_reps); }) == "bad-replications");

  SimConfig bad_start = cfg;
  bad_start.start = {1, 0};  // wrong length for a 3-level chain
  CHECK(thrown_kind([&] { run_replication(params, bad_start, 0); }) == "bad-start");

  SimConfig bad_start2 = cfg;
  bad_start2.start = {1, 0, 0};  // wrong length for the 6 two-provider types
  CHECK(thrown_kind([&] { run_replication(two_cp_base(), bad_start2, 0); }) ==
        "bad-start");

  Rng rng(1);
  CHECK(thrown_kind([&] { step_single(params, 0, rng); }) == "bad-level");
  CHECK(thrown_kind([&] { step_single(params, 4, rng); }) == "bad-level");
  CHECK(thrown_kind([&] { step_two_cp(two_cp_base(), -1, rng); }) == "bad-type");
  CHECK(thrown_kind([&] { step_two_cp(two_cp_base(), 6, rng); }) == "bad-type");
  CHECK(thrown_kind([&] { death_chain_mean_time(params, 0); }) == "bad-level");
  CHECK(thrown_kind([&] { death_chain_mean_time(params, 4); }) == "bad-level");
}
