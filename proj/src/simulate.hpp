#pragma once

#include <cstdint>
#include <vector>

#include "params.hpp"
#include "rng.hpp"
#include "shares.hpp"

namespace vtl {

// One transition of a single individual: the parent is consumed and the
// returned offspring counts are added to the population.
struct StepOutcome {
  std::vector<long long> offspring;  // counts per type
  double shares_cp1 = 0.0;           // recipient-counted shares (single CP uses cp1)
  double shares_cp2 = 0.0;
  double paper_k = 0.0;  // wake-up events plus terminal shift-outs
};

StepOutcome step_single(const ModelParams& params, int level, Rng& rng);
StepOutcome step_two_cp(const TwoCpParams& params, int type_index, Rng& rng);

struct SimConfig {
  long replications = 1000;
  std::uint64_t master_seed = 1;
  double horizon = 10.0;
  long long pop_cap = 100000;
  std::vector<double> checkpoints;
  ShareConvention convention = ShareConvention::Recipient;
  // Initial population by type index; empty means one individual of the
  // first type (single CP) or one of each seed pair orientation (two CP).
  std::vector<long long> start;
  // Optional weighted statistic (w . X(t)) exp(-stat_alpha t), stopped at
  // extinction or at the population cap.
  std::vector<double> stat_weights;
  double stat_alpha = 0.0;
};

// Outcome codes for a single replication.
enum class RunOutcome { Extinct = 0, CapHit = 1, HorizonAlive = 2 };

struct ReplicationResult {
  RunOutcome outcome = RunOutcome::Extinct;
  double stop_time = 0.0;
  double extinction_time = 0.0;  // meaningful when outcome == Extinct
  std::vector<double> shares_cp1_at;  // per checkpoint, frozen after stop
  std::vector<double> shares_cp2_at;
  std::vector<double> paper_k_at;
  std::vector<double> stat_at;  // stopped statistic per checkpoint
  std::vector<long long> final_counts;
  bool cp1_alive = false;
  bool cp2_alive = false;
  long long events = 0;
};

ReplicationResult run_replication(const ModelParams& params, const SimConfig& config,
                                  long replication);
ReplicationResult run_replication(const TwoCpParams& params, const SimConfig& config,
                                  long replication);

struct CheckpointStats {
  double t = 0.0;
  double mean_cp1 = 0.0;
  double half_width_cp1 = 0.0;
  double mean_cp2 = 0.0;
  double half_width_cp2 = 0.0;
  double mean_paper_k = 0.0;
  double half_width_paper_k = 0.0;
  double mean_stat = 0.0;
  double half_width_stat = 0.0;
  long frozen = 0;  // replications already stopped at this time
};

struct EnsembleResult {
  long replications = 0;
  double extinct_fraction = 0.0;
  double cap_fraction = 0.0;
  double horizon_alive_fraction = 0.0;
  double extinct_half_width = 0.0;  // 95% normal interval
  double bracket_low = 0.0;         // extinction probability bracket
  double bracket_high = 0.0;
  bool undecided_flagged = false;  // more than 5% unresolved at stop
  double mean_extinction_time = 0.0;
  double growth_rate_fit = 0.0;  // log-slope of mean shares over late checkpoints
  long clipped = 0;              // replications that hit the population cap
  std::vector<CheckpointStats> checkpoints;
  // Per-post bookkeeping (one entry for a single provider, two for the
  // competition model): fraction with the post gone at stop, and fraction
  // still alive at stop (could still die later).
  std::vector<double> post_extinct_fraction;
  std::vector<double> post_alive_fraction;
};

EnsembleResult run_ensemble(const ModelParams& params, const SimConfig& config);
EnsembleResult run_ensemble(const TwoCpParams& params, const SimConfig& config);

// Mean extinction time of a level-l start when no view ever leads to a
// share (pure shift/wake-up death chain).
double death_chain_mean_time(const ModelParams& params, int level);

}  // namespace vtl
