#include "simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "errors.hpp"

namespace vtl {
namespace {

int sample_index(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

struct Welford {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double half_width() const {
    if (n < 2) return 0.0;
    return 1.96 * std::sqrt(m2 / (n - 1) / n);
  }
};

template <typename Step>
ReplicationResult simulate_one(int dim, double rate_total, const std::vector<long long>& start,
                               const std::vector<char>& mask1, const std::vector<char>& mask2,
                               const SimConfig& config, long replication, Step&& step) {
  Rng rng = Rng::for_replication(config.master_seed, static_cast<std::uint64_t>(replication));
  std::vector<long long> counts = start;
  long long total = 0, n1 = 0, n2 = 0;
  for (int k = 0; k < dim; ++k) {
    total += counts[k];
    if (mask1[k]) n1 += counts[k];
    if (mask2[k]) n2 += counts[k];
  }
  double shares1 = 0.0, shares2 = 0.0, paper_k = 0.0;
  double t = 0.0;
  const std::size_t n_check = config.checkpoints.size();
  std::size_t ck = 0;
  const bool has_stat = !config.stat_weights.empty();

  ReplicationResult res;
  res.shares_cp1_at.reserve(n_check);
  res.shares_cp2_at.reserve(n_check);
  res.paper_k_at.reserve(n_check);
  if (has_stat) res.stat_at.reserve(n_check);

  auto stat_value = [&](double at) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += config.stat_weights[k] * counts[k];
    return s * std::exp(-config.stat_alpha * at);
  };
  auto record = [&](double value_time) {
    res.shares_cp1_at.push_back(shares1);
    res.shares_cp2_at.push_back(shares2);
    res.paper_k_at.push_back(paper_k);
    if (has_stat) res.stat_at.push_back(stat_value(value_time));
  };
  auto fill_rest = [&](double frozen_stat) {
    while (ck < n_check) {
      res.shares_cp1_at.push_back(shares1);
      res.shares_cp2_at.push_back(shares2);
      res.paper_k_at.push_back(paper_k);
      if (has_stat) res.stat_at.push_back(frozen_stat);
      ++ck;
    }
  };

  while (true) {
    if (total == 0) {
      res.outcome = RunOutcome::Extinct;
      res.stop_time = res.extinction_time = t;
      fill_rest(0.0);
      break;
    }
    if (total >= config.pop_cap) {
      res.outcome = RunOutcome::CapHit;
      res.stop_time = t;
      fill_rest(has_stat ? stat_value(t) : 0.0);
      break;
    }
    const double dt = rng.exponential(rate_total * static_cast<double>(total));
    const double tn = t + dt;
    if (tn >= config.horizon) {
      while (ck < n_check && config.checkpoints[ck] <= config.horizon) {
        record(config.checkpoints[ck]);
        ++ck;
      }
      res.outcome = RunOutcome::HorizonAlive;
      res.stop_time = config.horizon;
      fill_rest(has_stat ? stat_value(config.horizon) : 0.0);
      break;
    }
    while (ck < n_check && config.checkpoints[ck] < tn) {
      record(config.checkpoints[ck]);
      ++ck;
    }
    t = tn;

    // Pick the transitioning individual uniformly over the population.
    long long pick = static_cast<long long>(rng.uniform() * static_cast<double>(total));
    if (pick >= total) pick = total - 1;
    int idx = 0;
    for (; idx < dim; ++idx) {
      if (pick < counts[idx]) break;
      pick -= counts[idx];
    }
    const StepOutcome st = step(idx, rng);
    --counts[idx];
    --total;
    if (mask1[idx]) --n1;
    if (mask2[idx]) --n2;
    for (int k = 0; k < dim; ++k) {
      const long long o = st.offspring[k];
      if (o == 0) continue;
      counts[k] += o;
      total += o;
      if (mask1[k]) n1 += o;
      if (mask2[k]) n2 += o;
    }
    shares1 += st.shares_cp1;
    shares2 += st.shares_cp2;
    paper_k += st.paper_k;
    ++res.events;
  }
  res.cp1_alive = n1 > 0;
  res.cp2_alive = n2 > 0;
  res.final_counts = std::move(counts);
  return res;
}

template <typename RunOne>
EnsembleResult aggregate(const SimConfig& config, int n_posts, RunOne&& run_one) {
  if (config.replications < 1)
    throw config_error("bad-replications", "replications must be positive");
  const std::size_t n_check = config.checkpoints.size();
  EnsembleResult out;
  out.replications = config.replications;
  out.checkpoints.resize(n_check);
  std::vector<Welford> w1(n_check), w2(n_check), wk(n_check), ws(n_check);
  std::vector<double> cap_times;
  long extinct = 0, cap = 0, alive = 0;
  double extinct_time_sum = 0.0;
  long post_gone[2] = {0, 0};
  long post_alive[2] = {0, 0};

  for (long rep = 0; rep < config.replications; ++rep) {
    const ReplicationResult r = run_one(rep);
    switch (r.outcome) {
      case RunOutcome::Extinct:
        ++extinct;
        extinct_time_sum += r.extinction_time;
        break;
      case RunOutcome::CapHit:
        ++cap;
        cap_times.push_back(r.stop_time);
        break;
      case RunOutcome::HorizonAlive:
        ++alive;
        break;
    }
    const bool alive_flags[2] = {r.cp1_alive, r.cp2_alive};
    for (int j = 0; j < n_posts; ++j) {
      if (alive_flags[j]) ++post_alive[j];
      else ++post_gone[j];
    }
    for (std::size_t k = 0; k < n_check; ++k) {
      w1[k].add(r.shares_cp1_at[k]);
      w2[k].add(r.shares_cp2_at[k]);
      wk[k].add(r.paper_k_at[k]);
      if (!r.stat_at.empty()) ws[k].add(r.stat_at[k]);
    }
  }

  const double reps = static_cast<double>(config.replications);
  out.extinct_fraction = extinct / reps;
  out.cap_fraction = cap / reps;
  out.horizon_alive_fraction = alive / reps;
  out.extinct_half_width =
      1.96 * std::sqrt(out.extinct_fraction * (1.0 - out.extinct_fraction) / reps);
  out.bracket_low = out.extinct_fraction;
  out.bracket_high = out.extinct_fraction + out.horizon_alive_fraction;
  out.undecided_flagged = out.horizon_alive_fraction > 0.05;
  out.mean_extinction_time = extinct > 0 ? extinct_time_sum / extinct : 0.0;
  out.clipped = cap;
  for (int j = 0; j < n_posts; ++j) {
    out.post_extinct_fraction.push_back(post_gone[j] / reps);
    out.post_alive_fraction.push_back(post_alive[j] / reps);
  }

  std::sort(cap_times.begin(), cap_times.end());
  for (std::size_t k = 0; k < n_check; ++k) {
    CheckpointStats& cs = out.checkpoints[k];
    cs.t = config.checkpoints[k];
    cs.mean_cp1 = w1[k].mean;
    cs.half_width_cp1 = w1[k].half_width();
    cs.mean_cp2 = w2[k].mean;
    cs.half_width_cp2 = w2[k].half_width();
    cs.mean_paper_k = wk[k].mean;
    cs.half_width_paper_k = wk[k].half_width();
    cs.mean_stat = ws[k].mean;
    cs.half_width_stat = ws[k].half_width();
    cs.frozen = static_cast<long>(
        std::lower_bound(cap_times.begin(), cap_times.end(), cs.t) - cap_times.begin());
  }

  // Least-squares slope of log mean shares over the late half of the grid.
  if (n_check >= 4) {
    std::vector<double> ts, ys;
    for (std::size_t k = n_check / 2; k < n_check; ++k) {
      const double m = config.convention == ShareConvention::PaperK ? wk[k].mean : w1[k].mean;
      if (m > 0.0) {
        ts.push_back(config.checkpoints[k]);
        ys.push_back(std::log(m));
      }
    }
    if (ts.size() >= 2) {
      double st = 0, sy = 0, stt = 0, sty = 0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
      }
      const double m = static_cast<double>(ts.size());
      const double denom = m * stt - st * st;
      if (std::abs(denom) > 1e-12) out.growth_rate_fit = (m * sty - st * sy) / denom;
    }
  }
  return out;
}

struct TwoCpLayout {
  int n = 0;
  int dim = 0;
  // 0 = pair with provider 1 on top, 1 = pair with provider 2 on top,
  // 2 = exclusive provider 1, 3 = exclusive provider 2.
  std::vector<int> kind;
  std::vector<int> level;
  TwoCpOrder order;

  explicit TwoCpLayout(int levels) : n(levels), order{levels} {
    dim = order.dim();
    kind.resize(dim);
    level.resize(dim);
    for (int l = 1; l < n; ++l) {
      kind[order.top(l)] = 0;
      level[order.top(l)] = l;
      kind[order.bottom(l)] = 1;
      level[order.bottom(l)] = l;
    }
    for (int l = 1; l <= n; ++l) {
      kind[order.ex1(l)] = 2;
      level[order.ex1(l)] = l;
      kind[order.ex2(l)] = 3;
      level[order.ex2(l)] = l;
    }
  }
};

StepOutcome step_two_cp_impl(const TwoCpParams& params, const TwoCpLayout& layout,
                             int type_index, Rng& rng);

}  // namespace

StepOutcome step_single(const ModelParams& params, int level, Rng& rng) {
  const int n = params.levels;
  if (level < 1 || level > n) throw config_error("bad-level", "level out of range");
  StepOutcome out;
  out.offspring.assign(n, 0);
  if (rng.uniform() < params.theta()) {
    if (level < n) ++out.offspring[level];  // next level down the timeline
    else out.paper_k += 1.0;                // falls off the end
  } else {
    out.paper_k += 1.0;
    if (rng.uniform() < params.view(level)) {
      const int target = sample_index(params.level_probs, rng);
      const long long batch = params.friends.sample(params.eta, rng);
      out.offspring[target] += batch;
      out.shares_cp1 += static_cast<double>(batch);
    }
  }
  return out;
}

StepOutcome step_two_cp(const TwoCpParams& params, int type_index, Rng& rng) {
  return step_two_cp_impl(params, TwoCpLayout(params.levels), type_index, rng);
}

namespace {

StepOutcome step_two_cp_impl(const TwoCpParams& params, const TwoCpLayout& layout,
                             int type_index, Rng& rng) {
  const int n = params.levels;
  if (type_index < 0 || type_index >= layout.dim)
    throw config_error("bad-type", "type index out of range");
  StepOutcome out;
  out.offspring.assign(layout.dim, 0);
  const int kind = layout.kind[type_index];
  const int level = layout.level[type_index];
  const double theta = params.theta();

  if (kind >= 2) {
    // Exclusive timeline: single-provider behavior over the full level law.
    const int cp = kind - 1;  // 2 -> provider 1, 3 -> provider 2
    const double eta = params.eta(cp);
    if (rng.uniform() < theta) {
      if (level < n)
        ++out.offspring[cp == 1 ? layout.order.ex1(level + 1) : layout.order.ex2(level + 1)];
    } else if (rng.uniform() < params.view(level)) {
      const int target = 1 + sample_index(params.level_probs, rng);
      const long long batch = params.friends.sample(eta, rng);
      out.offspring[cp == 1 ? layout.order.ex1(target) : layout.order.ex2(target)] += batch;
      (cp == 1 ? out.shares_cp1 : out.shares_cp2) += static_cast<double>(batch);
    }
    return out;
  }

  // Mixed pair at pair level `level`; kind 0 has provider 1 on top.
  const int top_cp = kind == 0 ? 1 : 2;
  const double eta_top = params.eta(top_cp);
  const double eta_oth = params.eta(top_cp == 1 ? 2 : 1);
  if (rng.uniform() < theta) {
    if (level < n - 1) {
      ++out.offspring[kind == 0 ? layout.order.top(level + 1) : layout.order.bottom(level + 1)];
    } else {
      // Bottom post falls off the timeline; the top one survives at level N.
      ++out.offspring[top_cp == 1 ? layout.order.ex1(n) : layout.order.ex2(n)];
    }
    return out;
  }
  if (rng.uniform() >= params.view(level)) return out;

  if (rng.uniform() < params.delta) {
    // Adjacent re-share: joint batch plus the two single-post batches.
    const bool flip = rng.uniform() < params.p;
    const int new_top = flip ? (top_cp == 1 ? 2 : 1) : top_cp;
    const int pair_level = 1 + sample_index(params.rho_bar, rng);
    const long long both = params.friends.sample(eta_top * eta_oth, rng);
    out.offspring[new_top == 1 ? layout.order.top(pair_level)
                               : layout.order.bottom(pair_level)] += both;
    out.shares_cp1 += static_cast<double>(both);
    out.shares_cp2 += static_cast<double>(both);

    const int lone_top_level = 1 + sample_index(params.rho_bar, rng);
    const long long lone_top = params.friends.sample(eta_top * (1.0 - eta_oth), rng);
    out.offspring[top_cp == 1 ? layout.order.ex1(lone_top_level)
                              : layout.order.ex2(lone_top_level)] += lone_top;
    (top_cp == 1 ? out.shares_cp1 : out.shares_cp2) += static_cast<double>(lone_top);

    const int lone_oth_level = 1 + sample_index(params.rho_bar, rng);
    const long long lone_oth = params.friends.sample(eta_oth * (1.0 - eta_top), rng);
    out.offspring[top_cp == 1 ? layout.order.ex2(lone_oth_level)
                              : layout.order.ex1(lone_oth_level)] += lone_oth;
    (top_cp == 1 ? out.shares_cp2 : out.shares_cp1) += static_cast<double>(lone_oth);
  } else {
    // Only the top post propagates, onto exclusive timelines.
    const int target = 1 + sample_index(params.rho_bar, rng);
    const long long batch = params.friends.sample(eta_top, rng);
    out.offspring[top_cp == 1 ? layout.order.ex1(target) : layout.order.ex2(target)] += batch;
    (top_cp == 1 ? out.shares_cp1 : out.shares_cp2) += static_cast<double>(batch);
  }
  return out;
}

}  // namespace

ReplicationResult run_replication(const ModelParams& params, const SimConfig& config,
                                  long replication) {
  require_valid(params);
  const int n = params.levels;
  std::vector<long long> start = config.start;
  if (start.empty()) {
    start.assign(n, 0);
    start[0] = 1;
  }
  if (static_cast<int>(start.size()) != n)
    throw config_error("bad-start", "start vector length must match the level count");
  const std::vector<char> mask(n, 1);
  return simulate_one(n, params.rate_total(), start, mask, std::vector<char>(n, 0), config,
                      replication,
                      [&](int idx, Rng& rng) { return step_single(params, idx + 1, rng); });
}

ReplicationResult run_replication(const TwoCpParams& params, const SimConfig& config,
                                  long replication) {
  require_valid(params);
  const TwoCpLayout layout(params.levels);
  std::vector<long long> start = config.start;
  if (start.empty()) {
    start.assign(layout.dim, 0);
    start[layout.order.top(1)] = 1;
    start[layout.order.bottom(1)] = 1;
  }
  if (static_cast<int>(start.size()) != layout.dim)
    throw config_error("bad-start", "start vector length must match the type count");
  std::vector<char> mask1(layout.dim, 0), mask2(layout.dim, 0);
  for (int k = 0; k < layout.dim; ++k) {
    mask1[k] = layout.kind[k] == 0 || layout.kind[k] == 1 || layout.kind[k] == 2;
    mask2[k] = layout.kind[k] == 0 || layout.kind[k] == 1 || layout.kind[k] == 3;
  }
  return simulate_one(layout.dim, params.rate_total(), start, mask1, mask2, config, replication,
                      [&](int idx, Rng& rng) { return step_two_cp_impl(params, layout, idx, rng); });
}

EnsembleResult run_ensemble(const ModelParams& params, const SimConfig& config) {
  require_valid(params);
  return aggregate(config, 1,
                   [&](long rep) { return run_replication(params, config, rep); });
}

EnsembleResult run_ensemble(const TwoCpParams& params, const SimConfig& config) {
  require_valid(params);
  return aggregate(config, 2,
                   [&](long rep) { return run_replication(params, config, rep); });
}

double death_chain_mean_time(const ModelParams& params, int level) {
  require_valid(params);
  if (level < 1 || level > params.levels)
    throw config_error("bad-level", "level out of range");
  const double theta = params.theta();
  const int hops = params.levels - level + 1;
  return (1.0 - std::pow(theta, hops)) / ((1.0 - theta) * params.rate_total());
}

}  // namespace vtl

