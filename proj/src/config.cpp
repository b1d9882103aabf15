#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "errors.hpp"
#include "extinction.hpp"
#include "optimize.hpp"
#include "shares.hpp"
#include "simulate.hpp"
#include "spectral.hpp"

namespace vtl {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw config_error("bad-config", path.empty() ? msg : path + ": " + msg);
}

// Strict object reader: every key must be consumed, leftovers are reported
// with their dotted path.
class Fields {
 public:
  Fields(const json& node, std::string path) : node_(&node), path_(std::move(path)) {
    if (!node.is_object()) bad(path_, "expected an object");
  }

  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* take(const char* key) {
    used_.insert(key);
    const auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  const json& require(const char* key) {
    const json* j = take(key);
    if (!j) bad(join(key), "missing required key");
    return *j;
  }

  double number(const char* key) {
    const json& j = require(key);
    if (!j.is_number()) bad(join(key), "expected a number");
    return j.get<double>();
  }

  double number_or(const char* key, double fallback) {
    const json* j = take(key);
    if (!j) return fallback;
    if (!j->is_number()) bad(join(key), "expected a number");
    return j->get<double>();
  }

  long integer(const char* key) {
    const json& j = require(key);
    if (!j.is_number_integer()) bad(join(key), "expected an integer");
    return j.get<long>();
  }

  long integer_or(const char* key, long fallback) {
    const json* j = take(key);
    if (!j) return fallback;
    if (!j->is_number_integer()) bad(join(key), "expected an integer");
    return j->get<long>();
  }

  bool flag_or(const char* key, bool fallback) {
    const json* j = take(key);
    if (!j) return fallback;
    if (!j->is_boolean()) bad(join(key), "expected true or false");
    return j->get<bool>();
  }

  std::string text(const char* key) {
    const json& j = require(key);
    if (!j.is_string()) bad(join(key), "expected a string");
    return j.get<std::string>();
  }

  std::string text_or(const char* key, const std::string& fallback) {
    const json* j = take(key);
    if (!j) return fallback;
    if (!j->is_string()) bad(join(key), "expected a string");
    return j->get<std::string>();
  }

  std::vector<double> numbers(const char* key) {
    const json& j = require(key);
    return number_list(j, join(key));
  }

  std::vector<double> numbers_or(const char* key, std::vector<double> fallback) {
    const json* j = take(key);
    if (!j) return fallback;
    return number_list(*j, join(key));
  }

  static std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array()) bad(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const json& e : j) {
      if (!e.is_number()) bad(path, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void finish() const {
    for (auto it = node_->begin(); it != node_->end(); ++it)
      if (used_.find(it.key()) == used_.end()) bad(join(it.key()), "unknown key");
  }

 private:
  const json* node_;
  std::string path_;
  std::set<std::string> used_;
};

FriendLaw parse_friends(const json& node, const std::string& path) {
  Fields f(node, path);
  const std::string family = f.text("family");
  FriendLaw law;
  if (family == "poisson") law.family = FriendFamily::Poisson;
  else if (family == "geometric") law.family = FriendFamily::Geometric;
  else bad(path + ".family", "expected \"poisson\" or \"geometric\"");
  law.beta = f.number("beta");
  f.finish();
  return law;
}

ShareConvention parse_convention(const std::string& value, const std::string& path) {
  if (value == "paper-k") return ShareConvention::PaperK;
  if (value == "recipient") return ShareConvention::Recipient;
  bad(path, "expected \"paper-k\" or \"recipient\"");
}

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json vec_json(const std::vector<double>& v) {
  json out = json::array();
  for (const double x : v) out.push_back(x);
  return out;
}

std::string csv_cell(const std::string& raw) {
  if (raw.find_first_of(",\"\n\r") == std::string::npos) return raw;
  std::string out = "\"";
  for (const char c : raw) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

struct Csv {
  std::string text;
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text += ',';
      text += csv_cell(cells[i]);
    }
    text += '\n';
  }
};

struct Ctx {
  const json* model_node = nullptr;
  bool two_cp = false;
  std::uint64_t seed = 1;
  ShareConvention convention = ShareConvention::PaperK;
  bool convention_set = false;
};

struct Out {
  json result = json::object();
  std::vector<Artifact> artifacts;
  // Flat metrics for sweep rows, in stable order.
  std::vector<std::pair<std::string, double>> headline;
};

ModelParams single_model(const Ctx& ctx) {
  if (ctx.two_cp) bad("model", "this command needs a single-provider model");
  return parse_single_model(*ctx.model_node, "model");
}

TwoCpParams two_cp_model(const Ctx& ctx) {
  if (!ctx.two_cp) bad("model", "this command needs a two-provider model");
  return parse_two_cp_model(*ctx.model_node, "model");
}

Out cmd_spectral(const Ctx& ctx, Fields& opts) {
  opts.finish();
  Out out;
  PerronOptions po;
  po.allow_reducible = true;
  if (!ctx.two_cp) {
    const ModelParams p = single_model(ctx);
    const GeneratorMatrix gen = build_single(p);
    const PerronResult pr = perron(gen, po);
    out.result["alpha"] = pr.alpha;
    out.result["sigma"] = pr.sigma;
    out.result["irreducible"] = pr.irreducible;
    out.result["iterations"] = pr.iterations;
    const auto bounds = alpha_bounds(p);
    out.result["alpha_lower"] = bounds.first;
    out.result["alpha_upper"] = bounds.second;
    const PositiveRegularity reg = check_positive_regular(gen);
    out.result["positively_regular"] = reg.regular;
    if (reg.regular) out.result["regularity_exponent"] = reg.exponent;
    if (pr.irreducible) {
      out.result["u"] = vec_json(pr.u);
      out.result["v"] = vec_json(pr.v);
      out.result["residual_u"] = pr.residual_u;
      out.result["residual_v"] = pr.residual_v;
      const EigvecResiduals er = eigvec_residuals(p, pr);
      out.result["recursion_residuals"] = {{"u", er.u_recursion},
                                           {"v", er.v_recursion},
                                           {"scalar_u", er.scalar_u},
                                           {"scalar_v", er.scalar_v}};
    }
    out.headline = {{"alpha", pr.alpha}};
    return out;
  }
  const TwoCpParams p = two_cp_model(ctx);
  const PerronResult full = perron(build_full(p), po);
  const PerronResult mixed = perron(build_mixed(p), po);
  out.result["alpha"] = full.alpha;
  out.result["alpha_mixed"] = mixed.alpha;
  out.result["alpha_exclusive_1"] = perron(build_single(p.exclusive(1)), po).alpha;
  out.result["alpha_exclusive_2"] = perron(build_single(p.exclusive(2)), po).alpha;
  const auto bounds = alpha_bounds_mixed(p);
  out.result["alpha_mixed_lower"] = bounds.first;
  out.result["alpha_mixed_upper"] = bounds.second;
  out.result["mixed_irreducible"] = mixed.irreducible;
  if (mixed.irreducible) {
    out.result["u_mixed"] = vec_json(mixed.u);
    out.result["v_mixed"] = vec_json(mixed.v);
    const MixedEigvecResiduals mr = eigvec_residuals_mixed(p, mixed);
    out.result["recursion_residuals"] = {{"u_top", mr.u_top_recursion},
                                         {"u_bottom", mr.u_bottom_recursion},
                                         {"ratio", mr.ratio_identity}};
  }
  out.headline = {{"alpha", full.alpha}, {"alpha_mixed", mixed.alpha}};
  return out;
}

Out cmd_extinct(const Ctx& ctx, Fields& opts) {
  opts.finish();
  Out out;
  if (!ctx.two_cp) {
    const ModelParams p = single_model(ctx);
    const ExtinctionResult ext = solve_single(p);
    out.result["q"] = vec_json(ext.q);
    out.result["alpha"] = ext.alpha;
    out.result["iterations"] = ext.iterations;
    out.result["residual"] = ext.residual;
    out.result["level_relation_residual"] = ext.level_relation_residual;
    out.result["critical_indeterminate"] = ext.critical_indeterminate;
    double q_rho = 0.0;
    for (int l = 1; l <= p.levels; ++l) q_rho += p.rho(l) * ext.q[l - 1];
    out.result["q_rho"] = q_rho;
    out.headline = {{"q_first", ext.q[0]}, {"q_rho", q_rho}, {"alpha", ext.alpha}};
    return out;
  }
  const TwoCpParams p = two_cp_model(ctx);
  for (int cp = 1; cp <= 2; ++cp) {
    const TwoCpExtinctionResult ext = solve_two_cp(p, cp);
    json r;
    r["q_exclusive"] = vec_json(ext.q_exclusive);
    r["q_top_tracked"] = vec_json(ext.q_top_tracked);
    r["q_bottom_tracked"] = vec_json(ext.q_bottom_tracked);
    r["alpha_exclusive"] = ext.alpha_exclusive;
    r["iterations"] = ext.iterations;
    r["residual"] = ext.residual;
    r["exclusive_subcritical"] = ext.exclusive_subcritical;
    r["seed_pair_product"] = ext.seed_pair_product();
    r["warnings"] = ext.warnings;
    out.result[cp == 1 ? "cp1" : "cp2"] = std::move(r);
    out.headline.emplace_back(cp == 1 ? "pm1" : "pm2", ext.seed_pair_product());
  }
  return out;
}

std::vector<std::string> pair_labels(int levels, int cp, bool top) {
  // Tracked provider on top of the pair <=> (top == true). Labels use
  // (provider-1 level, provider-2 level) order.
  std::vector<std::string> out;
  for (int l = 1; l < levels; ++l) {
    const bool cp1_on_top = (cp == 1) == top;
    const int a = cp1_on_top ? l : l + 1;
    const int b = cp1_on_top ? l + 1 : l;
    out.push_back("y" + std::to_string(cp) + "_(" + std::to_string(a) + "," +
                  std::to_string(b) + ")");
  }
  return out;
}

Out cmd_shares(const Ctx& ctx, Fields& opts) {
  Out out;
  const std::vector<double> times = opts.numbers("times");
  if (times.empty()) bad(opts.join("times"), "need at least one time");
  const ShareConvention conv = parse_convention(
      opts.text_or("convention",
                   ctx.convention_set
                       ? (ctx.convention == ShareConvention::PaperK ? "paper-k" : "recipient")
                       : "paper-k"),
      opts.join("convention"));
  if (!ctx.two_cp) {
    const bool subtract_seed = opts.flag_or("subtract_seed", false);
    opts.finish();
    const ModelParams p = single_model(ctx);
    const Trajectory tr = viral_trajectory(p, times, conv, subtract_seed);
    const ViralAsymptote as = viral_asymptote(p, conv);
    out.result["alpha"] = tr.alpha;
    out.result["convention"] = conv == ShareConvention::PaperK ? "paper-k" : "recipient";
    out.result["times"] = vec_json(times);
    json rows = json::array();
    for (long i = 0; i < tr.y.rows(); ++i) rows.push_back(vec_json(tr.y.row(i).transpose()));
    out.result["y"] = std::move(rows);
    out.result["d"] = vec_json(as.d);
    out.result["e"] = vec_json(as.e);
    Csv csv;
    std::vector<std::string> header = {"t"};
    for (int l = 1; l <= p.levels; ++l) header.push_back("y_" + std::to_string(l));
    csv.row(header);
    for (long i = 0; i < tr.y.rows(); ++i) {
      std::vector<std::string> cells = {format_number(times[i])};
      for (int l = 0; l < p.levels; ++l) cells.push_back(format_number(tr.y(i, l)));
      csv.row(cells);
    }
    out.artifacts.push_back({"trajectory.csv", csv.text});
    out.headline = {{"alpha", tr.alpha}, {"y_first_final", tr.y(tr.y.rows() - 1, 0)}};
    return out;
  }
  opts.finish();
  const TwoCpParams p = two_cp_model(ctx);
  Csv csv;
  std::vector<std::string> header = {"t"};
  Eigen::MatrixXd traj[2];
  for (int cp = 1; cp <= 2; ++cp) {
    const TwoCpCoefficients coeffs = two_cp_coefficients(p, cp);
    traj[cp - 1] = two_cp_trajectory(coeffs, times);
    json r;
    r["alpha_exclusive"] = coeffs.alpha_exclusive;
    r["alpha_mixed"] = coeffs.alpha_mixed;
    r["three_term"] = coeffs.three_term;
    r["o_mx"] = coeffs.o_mx;
    r["d_top"] = vec_json(coeffs.d_top);
    r["d_bottom"] = vec_json(coeffs.d_bottom);
    r["e_top"] = vec_json(coeffs.e_top);
    r["e_bottom"] = vec_json(coeffs.e_bottom);
    r["g_top"] = vec_json(coeffs.g_top);
    r["g_bottom"] = vec_json(coeffs.g_bottom);
    r["d_exclusive"] = vec_json(coeffs.d_exclusive);
    r["e_exclusive"] = vec_json(coeffs.e_exclusive);
    json rows = json::array();
    for (long i = 0; i < traj[cp - 1].rows(); ++i)
      rows.push_back(vec_json(traj[cp - 1].row(i).transpose()));
    r["y"] = std::move(rows);
    out.result[cp == 1 ? "cp1" : "cp2"] = std::move(r);
    for (const std::string& s : pair_labels(p.levels, cp, true)) header.push_back(s);
    for (const std::string& s : pair_labels(p.levels, cp, false)) header.push_back(s);
    const long last = traj[cp - 1].rows() - 1;
    out.headline.emplace_back(cp == 1 ? "pm1" : "pm2",
                              traj[cp - 1](last, 0) + traj[cp - 1](last, p.levels - 1));
  }
  csv.row(header);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<std::string> cells = {format_number(times[i])};
    for (int cp = 0; cp < 2; ++cp)
      for (long c = 0; c < traj[cp].cols(); ++c)
        cells.push_back(format_number(traj[cp](static_cast<long>(i), c)));
    csv.row(cells);
  }
  out.artifacts.push_back({"trajectory.csv", csv.text});
  return out;
}

Out cmd_nonviral(const Ctx& ctx, Fields& opts) {
  opts.finish();
  Out out;
  if (!ctx.two_cp) {
    const ModelParams p = single_model(ctx);
    const NonviralShares nv = nonviral_expected(p);
    out.result["y"] = vec_json(nv.y);
    out.result["s_factor"] = nv.s_factor;
    out.result["y_rho"] = nv.y_rho;
    out.headline = {{"y_first", nv.y[0]}, {"y_rho", nv.y_rho}};
    return out;
  }
  const TwoCpParams p = two_cp_model(ctx);
  for (int cp = 1; cp <= 2; ++cp) {
    const TwoCpNonviral nv = two_cp_nonviral(p, cp);
    json r;
    r["y_top"] = vec_json(nv.y_top);
    r["y_bottom"] = vec_json(nv.y_bottom);
    r["y_top_agg"] = nv.y_top_agg;
    r["y_bottom_agg"] = nv.y_bottom_agg;
    r["y_mx_rho"] = nv.y_mx_rho;
    r["c_mx_o_mx"] = nv.c_mx_o_mx;
    r["exclusive"] = {{"y", vec_json(nv.exclusive.y)},
                      {"s_factor", nv.exclusive.s_factor},
                      {"y_rho", nv.exclusive.y_rho}};
    out.result[cp == 1 ? "cp1" : "cp2"] = std::move(r);
    out.headline.emplace_back(cp == 1 ? "pm1" : "pm2", nv.y_top[0] + nv.y_bottom[0]);
  }
  return out;
}

Out cmd_simulate(const Ctx& ctx, Fields& opts) {
  Out out;
  SimConfig sim;
  sim.replications = opts.integer_or("replications", 1000);
  sim.master_seed = ctx.seed;
  sim.horizon = opts.number_or("horizon", 10.0);
  sim.pop_cap = opts.integer_or("pop_cap", 100000);
  std::vector<double> default_checkpoints;
  for (int k = 1; k <= 8; ++k) default_checkpoints.push_back(sim.horizon * k / 8.0);
  sim.checkpoints = opts.numbers_or("checkpoints", default_checkpoints);
  if (!std::is_sorted(sim.checkpoints.begin(), sim.checkpoints.end()))
    bad(opts.join("checkpoints"), "checkpoint times must be nondecreasing");
  sim.convention = parse_convention(
      opts.text_or("convention",
                   ctx.convention_set
                       ? (ctx.convention == ShareConvention::PaperK ? "paper-k" : "recipient")
                       : "recipient"),
      opts.join("convention"));
  if (const json* start = opts.take("start")) {
    const std::vector<double> raw = Fields::number_list(*start, opts.join("start"));
    for (const double x : raw) {
      if (x < 0 || x != std::floor(x)) bad(opts.join("start"), "expected nonnegative counts");
      sim.start.push_back(static_cast<long long>(x));
    }
  }
  const std::string statistic = opts.text_or("statistic", "none");
  if (statistic != "none" && statistic != "martingale")
    bad(opts.join("statistic"), "expected \"none\" or \"martingale\"");
  opts.finish();

  EnsembleResult res;
  double stat_reference = 0.0;
  if (!ctx.two_cp) {
    const ModelParams p = single_model(ctx);
    if (statistic == "martingale") {
      const PerronResult pr = perron(build_single(p));
      sim.stat_weights.assign(pr.v.data(), pr.v.data() + pr.v.size());
      sim.stat_alpha = pr.alpha;
      if (sim.start.empty()) {
        stat_reference = pr.v[0];
      } else {
        for (std::size_t k = 0; k < sim.start.size() && k < sim.stat_weights.size(); ++k)
          stat_reference += sim.stat_weights[k] * static_cast<double>(sim.start[k]);
      }
    }
    res = run_ensemble(p, sim);
  } else {
    if (statistic == "martingale")
      bad(opts.join("statistic"), "the weighted statistic needs a single-provider model");
    const TwoCpParams p = two_cp_model(ctx);
    res = run_ensemble(p, sim);
  }

  out.result["replications"] = res.replications;
  out.result["extinct_fraction"] = res.extinct_fraction;
  out.result["cap_fraction"] = res.cap_fraction;
  out.result["horizon_alive_fraction"] = res.horizon_alive_fraction;
  out.result["extinct_half_width"] = res.extinct_half_width;
  out.result["bracket_low"] = res.bracket_low;
  out.result["bracket_high"] = res.bracket_high;
  out.result["undecided_flagged"] = res.undecided_flagged;
  out.result["mean_extinction_time"] = res.mean_extinction_time;
  out.result["growth_rate_fit"] = res.growth_rate_fit;
  out.result["clipped"] = res.clipped;
  out.result["post_extinct_fraction"] = vec_json(res.post_extinct_fraction);
  out.result["post_alive_fraction"] = vec_json(res.post_alive_fraction);
  if (statistic == "martingale") out.result["stat_reference"] = stat_reference;
  json rows = json::array();
  Csv csv;
  csv.row({"t", "mean_shares", "hw_shares", "mean_shares_cp2", "hw_shares_cp2", "mean_wakeups",
           "hw_wakeups", "mean_stat", "hw_stat", "frozen"});
  for (const CheckpointStats& cs : res.checkpoints) {
    json r;
    r["t"] = cs.t;
    r["mean_shares"] = cs.mean_cp1;
    r["hw_shares"] = cs.half_width_cp1;
    r["mean_shares_cp2"] = cs.mean_cp2;
    r["hw_shares_cp2"] = cs.half_width_cp2;
    r["mean_wakeups"] = cs.mean_paper_k;
    r["hw_wakeups"] = cs.half_width_paper_k;
    r["mean_stat"] = cs.mean_stat;
    r["hw_stat"] = cs.half_width_stat;
    r["frozen"] = cs.frozen;
    rows.push_back(std::move(r));
    csv.row({format_number(cs.t), format_number(cs.mean_cp1), format_number(cs.half_width_cp1),
             format_number(cs.mean_cp2), format_number(cs.half_width_cp2),
             format_number(cs.mean_paper_k), format_number(cs.half_width_paper_k),
             format_number(cs.mean_stat), format_number(cs.half_width_stat),
             std::to_string(cs.frozen)});
  }
  out.result["checkpoints"] = std::move(rows);
  out.artifacts.push_back({"simulation.csv", csv.text});
  out.headline = {{"extinct_fraction", res.extinct_fraction},
                  {"growth_rate_fit", res.growth_rate_fit}};
  return out;
}

OptimizeOptions shared_optimize_options(Fields& opts, bool two_cp) {
  OptimizeOptions o;
  const std::string objective = opts.text("objective");
  if (!two_cp) {
    if (objective == "extinction") o.objective = Objective::ExtinctionPlusCost;
    else if (objective == "growth") o.objective = Objective::GrowthRateMinusCost;
    else if (objective == "subcritical_shares") o.objective = Objective::SubcriticalSharesMinusCost;
    else bad(opts.join("objective"),
             "expected \"extinction\", \"growth\", or \"subcritical_shares\"");
  } else {
    if (objective == "extinction") o.objective = Objective::TwoCpExtinction;
    else if (objective == "shares") o.objective = Objective::TwoCpShares;
    else bad(opts.join("objective"), "expected \"extinction\" or \"shares\"");
  }
  o.psi = opts.number_or("psi", 0.0);
  o.t_eval = opts.number_or("t_eval", 1.0);
  o.grid_step = opts.number_or("grid_step", 0.01);
  o.tol = opts.number_or("tol", 1e-6);
  if (o.psi < 0.0) bad(opts.join("psi"), "cost weight must be nonnegative");
  if (o.grid_step <= 0.0 || o.grid_step > 1.0) bad(opts.join("grid_step"), "expected (0, 1]");
  if (o.tol <= 0.0) bad(opts.join("tol"), "expected a positive tolerance");
  return o;
}

Out cmd_optimize(const Ctx& ctx, Fields& opts) {
  Out out;
  OptimizeOptions o = shared_optimize_options(opts, false);
  const std::string aggregate = opts.text_or("aggregate", "rho");
  if (aggregate == "rho") o.aggregate = ExtinctionAggregate::Rho;
  else if (aggregate == "first_level") o.aggregate = ExtinctionAggregate::FirstLevel;
  else bad(opts.join("aggregate"), "expected \"rho\" or \"first_level\"");
  opts.finish();
  const ModelParams p = single_model(ctx);
  const ScalarOptimum so = optimal_quality(p, o);
  out.result["eta_star"] = so.eta;
  out.result["cost"] = so.cost;
  out.result["evaluations"] = so.evaluations;
  out.result["interior"] = so.interior;
  out.headline = {{"eta_star", so.eta}, {"cost", so.cost}};
  return out;
}

Out cmd_nash(const Ctx& ctx, Fields& opts) {
  Out out;
  OptimizeOptions o = shared_optimize_options(opts, true);
  o.max_rounds = opts.integer_or("max_rounds", 200);
  const bool multi_start = opts.flag_or("multi_start", false);
  const bool scan = opts.flag_or("scan", true);
  opts.finish();
  const TwoCpParams p = two_cp_model(ctx);
  const NashResult nr = nash_equilibrium(p, o);
  out.result["eta1_star"] = nr.eta1;
  out.result["eta2_star"] = nr.eta2;
  out.result["cost1"] = nr.cost1;
  out.result["cost2"] = nr.cost2;
  out.result["converged"] = nr.converged;
  out.result["rounds"] = nr.rounds;
  if (!nr.converged) {
    json its = json::array();
    for (const auto& [a, b] : nr.iterates) its.push_back({a, b});
    out.result["iterates"] = std::move(its);
  }
  if (scan) {
    const DeviationScan ds = deviation_scan(p, o, nr.eta1, nr.eta2);
    out.result["deviation"] = {{"eps1", ds.eps1}, {"eps2", ds.eps2}, {"certified", ds.certified}};
  }
  if (multi_start) {
    json starts = json::array();
    for (const NashResult& r : nash_multi_start(p, o))
      starts.push_back({{"eta1", r.eta1}, {"eta2", r.eta2}, {"converged", r.converged}});
    out.result["limits"] = std::move(starts);
  }
  out.headline = {{"eta1_star", nr.eta1},
                  {"eta2_star", nr.eta2},
                  {"cost1", nr.cost1},
                  {"cost2", nr.cost2},
                  {"converged", nr.converged ? 1.0 : 0.0}};
  return out;
}

Out dispatch(const Ctx& ctx, const std::string& command, Fields& opts);

Out cmd_sweep(const Ctx& ctx, Fields& opts) {
  Out out;
  const std::string variable = opts.text("variable");
  if (variable != "eta" && variable != "m" && variable != "theta" && variable != "psi")
    bad(opts.join("variable"), "expected \"eta\", \"m\", \"theta\", or \"psi\"");
  std::vector<double> values;
  if (const json* vals = opts.take("values")) {
    values = Fields::number_list(*vals, opts.join("values"));
    if (opts.take("from") || opts.take("to") || opts.take("step"))
      bad(opts.join("values"), "give either values or a from/to/step range, not both");
  } else {
    const double from = opts.number("from");
    const double to = opts.number("to");
    const double step = opts.number("step");
    if (step <= 0.0) bad(opts.join("step"), "expected a positive step");
    for (double v = from; v <= to + 1e-12 * std::max(1.0, std::abs(step)); v += step)
      values.push_back(v);
  }
  const double kappa = opts.number_or("kappa", 0.0);
  if (kappa != 0.0 && variable != "m")
    bad(opts.join("kappa"), "the lambda = kappa * m coupling applies to \"m\" sweeps only");
  const json* inner = opts.take("inner");
  if (!inner || !inner->is_object())
    bad(opts.join("inner"), "expected an inner command object");
  opts.finish();

  json inner_copy = *inner;
  if (!inner_copy.contains("command") || !inner_copy["command"].is_string())
    bad(opts.join("inner.command"), "missing command name");
  const std::string inner_command = inner_copy["command"].get<std::string>();
  if (inner_command == "sweep") bad(opts.join("inner.command"), "sweeps do not nest");
  if (variable == "psi" && inner_command != "optimize" && inner_command != "nash")
    bad(opts.join("variable"), "a psi sweep needs an optimize or nash inner command");
  if (variable == "eta" && ctx.two_cp)
    bad(opts.join("variable"), "an eta sweep needs a single-provider model");
  if (variable == "m" || variable == "theta") {
    for (const char* key : {"lambda", "nu"})
      if (!ctx.model_node->contains(key) || !(*ctx.model_node)[key].is_number())
        bad(std::string("model.") + key, "expected a number");
  }

  struct Row {
    double value = 0.0;
    std::vector<std::pair<std::string, double>> metrics;
    std::string error;
  };
  std::vector<Row> rows;
  std::vector<std::string> metric_names;
  long failed = 0;
  for (const double value : values) {
    Row row;
    row.value = value;
    json model = *ctx.model_node;
    json inner_opts = inner_copy;
    inner_opts.erase("command");
    try {
      if (variable == "eta") {
        model["eta"] = value;
      } else if (variable == "m") {
        if (!model.contains("friends") || !model["friends"].is_object() ||
            !model["friends"].contains("family"))
          bad("model.friends", "expected a friends block");
        const std::string family = model["friends"]["family"].get<std::string>();
        if (family == "poisson") model["friends"]["beta"] = value;
        else model["friends"]["beta"] = value / (1.0 + value);
        if (kappa != 0.0) model["lambda"] = kappa * value;
      } else if (variable == "theta") {
        const double rate = (*ctx.model_node)["lambda"].get<double>() +
                            (*ctx.model_node)["nu"].get<double>();
        model["lambda"] = value * rate;
        model["nu"] = (1.0 - value) * rate;
      } else {  // psi
        inner_opts["psi"] = value;
      }
      Ctx inner_ctx = ctx;
      inner_ctx.model_node = &model;
      inner_ctx.two_cp = model_is_two_cp(model);
      Fields inner_fields(inner_opts, "options");
      const Out res = dispatch(inner_ctx, inner_command, inner_fields);
      row.metrics = res.headline;
      for (const auto& [name, _] : res.headline)
        if (std::find(metric_names.begin(), metric_names.end(), name) == metric_names.end())
          metric_names.push_back(name);
    } catch (const VtlError& e) {
      if (e.code() != ErrorCode::Regime) throw;
      row.error = e.kind();
      ++failed;
    }
    rows.push_back(std::move(row));
  }

  Csv csv;
  std::vector<std::string> header = {variable};
  header.insert(header.end(), metric_names.begin(), metric_names.end());
  header.push_back("error");
  csv.row(header);
  for (const Row& row : rows) {
    std::vector<std::string> cells = {format_number(row.value)};
    for (const std::string& name : metric_names) {
      std::string cell;
      for (const auto& [k, v] : row.metrics)
        if (k == name) {
          cell = format_number(v);
          break;
        }
      cells.push_back(cell);
    }
    cells.push_back(row.error);
    csv.row(cells);
  }
  out.artifacts.push_back({"sweep.csv", csv.text});
  out.result["variable"] = variable;
  out.result["rows"] = rows.size();
  out.result["failed"] = failed;
  out.headline = {{"rows", static_cast<double>(rows.size())},
                  {"failed", static_cast<double>(failed)}};
  return out;
}

Out dispatch(const Ctx& ctx, const std::string& command, Fields& opts) {
  if (command == "spectral") return cmd_spectral(ctx, opts);
  if (command == "extinct") return cmd_extinct(ctx, opts);
  if (command == "shares") return cmd_shares(ctx, opts);
  if (command == "nonviral") return cmd_nonviral(ctx, opts);
  if (command == "simulate") return cmd_simulate(ctx, opts);
  if (command == "optimize") return cmd_optimize(ctx, opts);
  if (command == "nash") return cmd_nash(ctx, opts);
  if (command == "sweep") return cmd_sweep(ctx, opts);
  bad("command", "unknown command \"" + command + "\"");
}

}  // namespace

ModelParams parse_single_model(const json& node, const std::string& path) {
  Fields f(node, path);
  if (const json* type = f.take("type")) {
    if (!type->is_string() || type->get<std::string>() != "single")
      bad(f.join("type"), "expected \"single\"");
  }
  ModelParams p;
  p.levels = static_cast<int>(f.integer("levels"));
  p.lambda = f.number("lambda");
  p.nu = f.number("nu");
  p.eta = f.number("eta");
  p.view_probs = f.numbers("view_probs");
  p.level_probs = f.numbers("level_probs");
  p.friends = parse_friends(f.require("friends"), f.join("friends"));
  f.finish();
  require_valid(p);
  return p;
}

TwoCpParams parse_two_cp_model(const json& node, const std::string& path) {
  Fields f(node, path);
  const std::string type = f.text("type");
  if (type != "two_cp") bad(f.join("type"), "expected \"two_cp\"");
  TwoCpParams p;
  p.levels = static_cast<int>(f.integer("levels"));
  p.lambda = f.number("lambda");
  p.nu = f.number("nu");
  p.view_probs = f.numbers("view_probs");
  p.level_probs = f.numbers("level_probs");
  p.rho_bar = f.numbers("rho_bar");
  p.friends = parse_friends(f.require("friends"), f.join("friends"));
  p.eta1 = f.number("eta1");
  p.eta2 = f.number("eta2");
  p.w1 = f.number_or("w1", 1.0);
  p.w2 = f.number_or("w2", 1.0);
  p.delta = f.number("delta");
  p.p = f.number("p");
  f.finish();
  require_valid(p);
  return p;
}

bool model_is_two_cp(const json& node) {
  return node.is_object() && node.contains("type") && node["type"].is_string() &&
         node["type"].get<std::string>() == "two_cp";
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CommandOutput run_config(const json& config) {
  Fields top(config, "");
  const json* model_node = top.take("model");
  if (!model_node) bad("model", "missing required key");
  if (!model_node->is_object()) bad("model", "expected an object");
  Ctx ctx;
  ctx.model_node = model_node;
  ctx.two_cp = model_is_two_cp(*model_node);
  if (const json* seed = top.take("seed")) {
    const bool nonneg = seed->is_number_unsigned() ||
                        (seed->is_number_integer() && seed->get<long long>() >= 0);
    if (!nonneg) bad("seed", "expected a nonnegative integer");
    ctx.seed = seed->get<std::uint64_t>();
  }
  if (const json* conv = top.take("convention")) {
    if (!conv->is_string()) bad("convention", "expected a string");
    ctx.convention = parse_convention(conv->get<std::string>(), "convention");
    ctx.convention_set = true;
  }
  const std::string command = top.text("command");
  const json* opts_node = top.take("options");
  const json empty = json::object();
  top.finish();

  // Validate the model block eagerly so config errors surface before any
  // command work starts.
  if (ctx.two_cp) parse_two_cp_model(*model_node, "model");
  else parse_single_model(*model_node, "model");

  Fields opts(opts_node ? *opts_node : empty, "options");
  Out out = dispatch(ctx, command, opts);

  CommandOutput result;
  result.report["tool"] = "viraltl";
  result.report["version"] = kVersion;
  result.report["command"] = command;
  result.report["seed"] = ctx.seed;
  result.report["model"] = *model_node;
  result.report["result"] = std::move(out.result);
  json artifacts = json::array();
  for (const Artifact& a : out.artifacts)
    artifacts.push_back({{"name", a.name}, {"content", a.content}});
  result.report["artifacts"] = std::move(artifacts);
  result.artifacts = std::move(out.artifacts);
  return result;
}

CommandOutput run_config_text(const std::string& text) {
  json config;
  try {
    config = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error("malformed-json", e.what());
  }
  return run_config(config);
}

std::vector<std::string> validate_report(const json& report) {
  std::vector<std::string> problems;
  if (!report.is_object()) {
    problems.push_back("report: expected an object");
    return problems;
  }
  const char* const required[] = {"tool", "version", "command", "seed", "model", "result",
                                  "artifacts"};
  for (const char* key : required)
    if (!report.contains(key)) problems.push_back(std::string(key) + ": missing");
  for (auto it = report.begin(); it != report.end(); ++it) {
    bool known = false;
    for (const char* key : required)
      if (it.key() == key) known = true;
    if (!known) problems.push_back(it.key() + ": unknown key");
  }
  if (report.contains("tool") && report["tool"] != "viraltl")
    problems.push_back("tool: expected \"viraltl\"");
  if (report.contains("version") && !report["version"].is_string())
    problems.push_back("version: expected a string");
  if (report.contains("command") &&
      (!report["command"].is_string() || report["command"].get<std::string>().empty()))
    problems.push_back("command: expected a nonempty string");
  if (report.contains("seed") && !report["seed"].is_number_unsigned())
    problems.push_back("seed: expected a nonnegative integer");
  if (report.contains("model") && !report["model"].is_object())
    problems.push_back("model: expected an object");
  if (report.contains("result") && !report["result"].is_object())
    problems.push_back("result: expected an object");
  if (report.contains("artifacts")) {
    if (!report["artifacts"].is_array()) {
      problems.push_back("artifacts: expected an array");
    } else {
      int i = 0;
      for (const json& a : report["artifacts"]) {
        const std::string tag = "artifacts[" + std::to_string(i++) + "]";
        if (!a.is_object() || !a.contains("name") || !a.contains("content") ||
            !a["name"].is_string() || !a["content"].is_string()) {
          problems.push_back(tag + ": expected {name, content} strings");
          continue;
        }
        const std::string name = a["name"].get<std::string>();
        if (name.empty() || name.find('/') != std::string::npos ||
            name.find('\\') != std::string::npos)
          problems.push_back(tag + ".name: expected a bare file name");
      }
    }
  }
  return problems;
}

}  // namespace vtl
