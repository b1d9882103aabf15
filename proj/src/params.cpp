#include "params.hpp"

#include <cmath>
#include <sstream>

namespace vtl {

double FriendLaw::mean() const {
  switch (family) {
    case FriendFamily::Poisson: return beta;
    case FriendFamily::Geometric: return beta / (1.0 - beta);
  }
  return 0.0;
}

double FriendLaw::geometric_p(double eta) const {
  return beta * eta / (1.0 - beta + beta * eta);
}

double FriendLaw::pgf(double s, double eta) const {
  switch (family) {
    case FriendFamily::Poisson:
      return std::exp(beta * eta * (s - 1.0));
    case FriendFamily::Geometric: {
      const double p = geometric_p(eta);
      return (1.0 - p) / (1.0 - p * s);
    }
  }
  return 1.0;
}

double FriendLaw::pmf(long k, double eta) const {
  if (k < 0) return 0.0;
  switch (family) {
    case FriendFamily::Poisson: {
      const double mu = beta * eta;
      if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
      return std::exp(-mu + static_cast<double>(k) * std::log(mu) - std::lgamma(k + 1.0));
    }
    case FriendFamily::Geometric: {
      const double p = geometric_p(eta);
      if (p == 0.0) return k == 0 ? 1.0 : 0.0;
      return (1.0 - p) * std::pow(p, static_cast<double>(k));
    }
  }
  return 0.0;
}

long FriendLaw::sample(double eta, Rng& rng) const {
  switch (family) {
    case FriendFamily::Poisson: return rng.poisson(beta * eta);
    case FriendFamily::Geometric: return rng.geometric(geometric_p(eta));
  }
  return 0;
}

std::vector<double> ModelParams::c_vec() const {
  std::vector<double> c(level_probs.size());
  const double total = c_total();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = total * level_probs[i];
  return c;
}

ModelParams TwoCpParams::exclusive(int cp) const {
  ModelParams single;
  single.levels = levels;
  single.lambda = lambda;
  single.nu = nu;
  single.eta = eta(cp);
  single.view_probs = view_probs;
  single.level_probs = level_probs;
  single.friends = friends;
  return single;
}

std::string TypeLabel::str() const {
  std::ostringstream out;
  out << "(" << cp1 << "," << cp2 << ")";
  return out.str();
}

std::vector<TypeLabel> TwoCpOrder::types() const {
  std::vector<TypeLabel> labels(dim());
  for (int l = 1; l < n; ++l) {
    labels[top(l)] = TypeLabel{l, l + 1};
    labels[bottom(l)] = TypeLabel{l + 1, l};
  }
  for (int l = 1; l <= n; ++l) {
    labels[ex1(l)] = TypeLabel{l, 0};
    labels[ex2(l)] = TypeLabel{0, l};
  }
  return labels;
}

namespace {

void check_friends(const FriendLaw& friends, std::vector<std::string>& out) {
  switch (friends.family) {
    case FriendFamily::Poisson:
      if (!(friends.beta > 0.0)) out.push_back("friends.beta must be > 0 for the poisson family");
      break;
    case FriendFamily::Geometric:
      if (!(friends.beta > 0.0 && friends.beta < 1.0))
        out.push_back("friends.beta must be in (0,1) for the geometric family");
      break;
  }
}

void check_rates(double lambda, double nu, std::vector<std::string>& out) {
  if (!(lambda > 0.0)) out.push_back("lambda must be > 0");
  if (!(nu > 0.0)) out.push_back("nu must be > 0");
}

void check_probability_vector(const std::vector<double>& v, std::size_t size,
                              const char* name, bool sums_to_one, bool first_positive,
                              std::vector<std::string>& out) {
  if (v.size() != size) {
    std::ostringstream msg;
    msg << name << " must have " << size << " entries, got " << v.size();
    out.push_back(msg.str());
    return;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
      std::ostringstream msg;
      msg << name << "[" << i + 1 << "] must lie in [0,1]";
      out.push_back(msg.str());
    }
    sum += v[i];
  }
  if (sums_to_one && std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << name << " must sum to 1 (got " << sum << ")";
    out.push_back(msg.str());
  }
  if (first_positive && !v.empty() && !(v[0] > 0.0)) {
    std::ostringstream msg;
    msg << name << "[1] must be > 0";
    out.push_back(msg.str());
  }
}

void check_view_probs(const std::vector<double>& r, std::size_t size,
                      std::vector<std::string>& out) {
  if (r.size() != size) {
    std::ostringstream msg;
    msg << "view_probs must have " << size << " entries, got " << r.size();
    out.push_back(msg.str());
    return;
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0 && r[i] <= 1.0)) {
      std::ostringstream msg;
      msg << "view_probs[" << i + 1 << "] must lie in (0,1]";
      out.push_back(msg.str());
    }
  }
  // Posts deeper in the timeline are never more visible; the spectral bounds
  // and the sub-critical monotonicity arguments rely on this shape.
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (r[i] > r[i - 1]) {
      out.push_back("view_probs must be nonincreasing in the level");
      break;
    }
  }
}

}  // namespace

std::vector<std::string> validate(const ModelParams& params) {
  std::vector<std::string> out;
  if (params.levels < 1) out.push_back("levels must be >= 1");
  check_rates(params.lambda, params.nu, out);
  if (!(params.eta >= 0.0 && params.eta <= 1.0)) out.push_back("eta must lie in [0,1]");
  check_friends(params.friends, out);
  if (params.levels >= 1) {
    check_view_probs(params.view_probs, static_cast<std::size_t>(params.levels), out);
    check_probability_vector(params.level_probs, static_cast<std::size_t>(params.levels),
                             "level_probs", true, true, out);
  }
  return out;
}

std::vector<std::string> validate(const TwoCpParams& params) {
  std::vector<std::string> out;
  if (params.levels < 2) out.push_back("levels must be >= 2 for the two-provider model");
  check_rates(params.lambda, params.nu, out);
  check_friends(params.friends, out);
  if (!(params.w1 >= 1.0)) out.push_back("w1 must be >= 1");
  if (!(params.w2 >= 1.0)) out.push_back("w2 must be >= 1");
  if (!(params.eta1 >= 0.0 && params.w1 > 0.0 && params.eta1 <= 1.0 / params.w1 + 1e-12))
    out.push_back("eta1 must lie in [0, 1/w1]");
  if (!(params.eta2 >= 0.0 && params.w2 > 0.0 && params.eta2 <= 1.0 / params.w2 + 1e-12))
    out.push_back("eta2 must lie in [0, 1/w2]");
  if (!(params.delta >= 0.0 && params.delta <= 1.0)) out.push_back("delta must lie in [0,1]");
  if (!(params.p >= 0.0 && params.p <= 1.0)) out.push_back("p must lie in [0,1]");
  if (params.levels >= 2) {
    check_view_probs(params.view_probs, static_cast<std::size_t>(params.levels), out);
    check_probability_vector(params.level_probs, static_cast<std::size_t>(params.levels),
                             "level_probs", true, true, out);
    check_probability_vector(params.rho_bar, static_cast<std::size_t>(params.levels - 1),
                             "rho_bar", true, true, out);
  }
  return out;
}

namespace {

void throw_if_invalid(const std::vector<std::string>& violations) {
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid parameters:";
  for (const auto& v : violations) msg << "\n  - " << v;
  throw config_error("invalid-params", msg.str());
}

}  // namespace

void require_valid(const ModelParams& params) { throw_if_invalid(validate(params)); }
void require_valid(const TwoCpParams& params) { throw_if_invalid(validate(params)); }

double offspring_pgf_single(const ModelParams& params, int level, const std::vector<double>& s) {
  const double theta = params.theta();
  const int n = params.levels;
  double shifted = level < n ? s[level] : 1.0;  // s_{l+1}; falling off level N ends the line
  double batch = 0.0;
  for (int i = 1; i <= n; ++i) batch += params.friends.pgf(s[i - 1], params.eta) * params.rho(i);
  const double r = params.view(level);
  return theta * shifted + (1.0 - theta) * r * batch + (1.0 - theta) * (1.0 - r);
}

namespace {

// Sum_i rho_bar_i * f(s[index(i)], eta_eff) for one independent batch of a
// mixed transition; index maps the batch's target block into TwoCpOrder.
template <typename IndexFn>
double mixed_batch_pgf(const TwoCpParams& params, const std::vector<double>& s,
                       double eta_eff, IndexFn index) {
  double sum = 0.0;
  for (int i = 1; i < params.levels; ++i)
    sum += params.rho_bar[i - 1] * params.friends.pgf(s[index(i)], eta_eff);
  return sum;
}

}  // namespace

double offspring_pgf_two_cp(const TwoCpParams& params, const TypeLabel& type,
                            const std::vector<double>& s) {
  const TwoCpOrder order(params.levels);
  const int n = params.levels;
  const double theta = params.theta();

  if (!type.mixed()) {
    // Exclusive TLs follow the single-provider dynamics of their own block.
    const int cp = type.cp1 > 0 ? 1 : 2;
    const int level = cp == 1 ? type.cp1 : type.cp2;
    const double eta = params.eta(cp);
    double shifted = 1.0;
    if (level < n) shifted = s[cp == 1 ? order.ex1(level + 1) : order.ex2(level + 1)];
    double batch = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double si = s[cp == 1 ? order.ex1(i) : order.ex2(i)];
      batch += params.friends.pgf(si, eta) * params.level_probs[i - 1];
    }
    const double r = params.view(level);
    return theta * shifted + (1.0 - theta) * r * batch + (1.0 - theta) * (1.0 - r);
  }

  const bool cp1_on_top = type.cp1 < type.cp2;
  const int l = cp1_on_top ? type.cp1 : type.cp2;  // pair level = level of the top post

  // Shift: the pair moves down together; at pair level N-1 the lower post
  // falls off and only the top one remains, as an exclusive TL at level N.
  double shifted;
  if (l < n - 1) {
    shifted = s[cp1_on_top ? order.top(l + 1) : order.bottom(l + 1)];
  } else {
    shifted = s[cp1_on_top ? order.ex1(n) : order.ex2(n)];
  }

  const double eta_top = cp1_on_top ? params.eta1 : params.eta2;
  const double eta_low = cp1_on_top ? params.eta2 : params.eta1;
  const double delta = params.delta;
  // Probability a forwarded pair keeps the parent's orientation.
  const double keep = 1.0 - params.p;

  const double ex_top_only = mixed_batch_pgf(
      params, s, eta_top, [&](int i) { return cp1_on_top ? order.ex1(i) : order.ex2(i); });
  const double pair_keep = mixed_batch_pgf(
      params, s, params.eta1 * params.eta2,
      [&](int i) { return cp1_on_top ? order.top(i) : order.bottom(i); });
  const double pair_flip = mixed_batch_pgf(
      params, s, params.eta1 * params.eta2,
      [&](int i) { return cp1_on_top ? order.bottom(i) : order.top(i); });
  const double ex_top_besides = mixed_batch_pgf(
      params, s, eta_top * (1.0 - eta_low),
      [&](int i) { return cp1_on_top ? order.ex1(i) : order.ex2(i); });
  const double ex_low_besides = mixed_batch_pgf(
      params, s, eta_low * (1.0 - eta_top),
      [&](int i) { return cp1_on_top ? order.ex2(i) : order.ex1(i); });

  const double r = params.view(l);
  // Viewing only the top post shares it alone; viewing both (probability
  // delta) produces three independent batches: the pair together, the top
  // post alone, and the lower post alone.
  const double view_part =
      (1.0 - delta) * ex_top_only +
      delta * (keep * pair_keep + params.p * pair_flip) * ex_top_besides * ex_low_besides;
  return theta * shifted + (1.0 - theta) * r * view_part + (1.0 - theta) * (1.0 - r);
}

}  // namespace vtl
