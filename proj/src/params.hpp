// Model parameters for viral propagation over timelines.
//
// A post lives on a timeline (TL) at level l in {1..N}. Each TL is hit by
// events at total rate lambda + nu: with probability theta = lambda/(lambda+nu)
// a newer post arrives and the tracked post shifts down one level (falling off
// at level N); otherwise the TL owner wakes up, views the top-level post with
// probability r_l, and shares it to a random subset of friends. Recipients'
// TLs place the post at level i with probability rho_i. The sharing TL never
// acts on the post again, so each transition replaces the parent.
//
// The two-provider variant tracks pairs of posts on the same TL at adjacent
// levels (l, l+1) plus single-post "exclusive" TLs; see TwoCpParams.
#ifndef VIRALTL_PARAMS_HPP
#define VIRALTL_PARAMS_HPP

#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace vtl {

enum class FriendFamily { Poisson, Geometric };

// Number of friends a share reaches. A post of quality eta in [0,1] thins the
// friend count: each share lands on a batch whose mean is eta * mean().
struct FriendLaw {
  FriendFamily family = FriendFamily::Poisson;
  double beta = 1.0;  // Poisson mean, or geometric parameter in (0,1)

  // Mean friend count m.
  double mean() const;
  // Mean recipients per share event, m * eta.
  double batch_mean(double eta) const { return mean() * eta; }
  // E[s^zeta] for the thinned batch size zeta at quality eta.
  double pgf(double s, double eta) const;
  // P(zeta = k) at quality eta.
  double pmf(long k, double eta) const;
  // Draw one batch size.
  long sample(double eta, Rng& rng) const;

  // Geometric continuation parameter at quality eta: the thinned batch is
  // geometric with P(zeta=k) = (1-p) p^k, p = beta*eta / (1-beta+beta*eta),
  // which keeps the mean contract batch_mean(eta) = mean()*eta exact.
  double geometric_p(double eta) const;
};

// Single-provider model.
struct ModelParams {
  int levels = 1;                  // N
  double lambda = 1.0;             // shift (new post arrival) rate
  double nu = 1.0;                 // wake-up rate
  double eta = 1.0;                // post quality in [0,1]
  std::vector<double> view_probs;  // r_1..r_N, probability a woken user views level l
  std::vector<double> level_probs; // rho_1..rho_N, placement law on recipients' TLs
  FriendLaw friends;

  double rate_total() const { return lambda + nu; }
  double theta() const { return lambda / (lambda + nu); }
  // c = (1-theta) * m * eta; c_l = c * rho_l is the mean type-l offspring per event.
  double c_total() const { return (1.0 - theta()) * friends.batch_mean(eta); }
  std::vector<double> c_vec() const;

  double view(int level) const { return view_probs[level - 1]; }
  double rho(int level) const { return level_probs[level - 1]; }
};

// Two content providers (CP1, CP2) competing on the same timelines.
// Mixed TLs hold both posts at adjacent levels: type (l, l+1) has CP1's post
// on top at level l, type (l+1, l) has CP2's on top. A woken user views the
// top post with probability r_l and the lower one with probability delta; when
// both posts are forwarded together, the recipient sees them order-reversed
// with probability p. Exclusive TLs (l,0) / (0,l) behave like the
// single-provider model with quality eta1 / eta2. Offspring of mixed TLs are
// placed at level i < N with probability rho_bar_i.
struct TwoCpParams {
  int levels = 2;                  // N >= 2
  double lambda = 1.0;
  double nu = 1.0;
  std::vector<double> view_probs;  // r_1..r_N
  std::vector<double> level_probs; // rho_1..rho_N, used by exclusive TLs
  FriendLaw friends;
  double eta1 = 1.0, eta2 = 1.0;   // effective qualities, eta_j in [0, 1/w_j]
  double w1 = 1.0, w2 = 1.0;       // influence factors >= 1
  double delta = 0.0;              // probability the lower post is also viewed
  double p = 0.0;                  // order-reversal probability on forwarded pairs
  std::vector<double> rho_bar;     // rho_bar_1..rho_bar_{N-1}, placement for mixed offspring

  double rate_total() const { return lambda + nu; }
  double theta() const { return lambda / (lambda + nu); }
  double eta(int cp) const { return cp == 1 ? eta1 : eta2; }
  double influence(int cp) const { return cp == 1 ? w1 : w2; }
  // c_j = (1-theta) * m * eta_j.
  double c_cp(int cp) const { return (1.0 - theta()) * friends.batch_mean(eta(cp)); }
  // c_mx = delta * (1-theta) * m * eta1 * eta2, the mixed-pair forwarding rate.
  double c_mx() const { return delta * (1.0 - theta()) * friends.batch_mean(eta1 * eta2); }
  double view(int level) const { return view_probs[level - 1]; }

  // The single-provider model an exclusive CP-j TL follows.
  ModelParams exclusive(int cp) const;
};

// One TL type in the two-provider chain: level of each CP's post, 0 = absent.
struct TypeLabel {
  int cp1 = 0;
  int cp2 = 0;
  bool mixed() const { return cp1 > 0 && cp2 > 0; }
  bool has(int cp) const { return (cp == 1 ? cp1 : cp2) > 0; }
  std::string str() const;
};

// Canonical ordering of the 4N-2 two-provider types: mixed pairs interleaved
// (1,2),(2,1),(2,3),(3,2),... then exclusives (1,0)..(N,0), then (0,1)..(0,N).
struct TwoCpOrder {
  explicit TwoCpOrder(int levels) : n(levels) {}
  int n;
  int mixed_count() const { return 2 * (n - 1); }
  int dim() const { return 4 * n - 2; }
  int top(int pair_level) const { return 2 * (pair_level - 1); }     // (l, l+1)
  int bottom(int pair_level) const { return 2 * (pair_level - 1) + 1; } // (l+1, l)
  int ex1(int level) const { return mixed_count() + (level - 1); }
  int ex2(int level) const { return mixed_count() + n + (level - 1); }
  std::vector<TypeLabel> types() const;
};

// Structured validation: one human-readable violation per broken rule, empty
// when the parameters are usable.
std::vector<std::string> validate(const ModelParams& params);
std::vector<std::string> validate(const TwoCpParams& params);
// Throws a config error listing every violation.
void require_valid(const ModelParams& params);
void require_valid(const TwoCpParams& params);

// Offspring probability generating function of a type-l TL: E[prod_k s_k^{X_k}]
// over the next transition. s has one coordinate per level 1..N.
double offspring_pgf_single(const ModelParams& params, int level, const std::vector<double>& s);

// Offspring PGF of any two-provider type; s has one coordinate per TwoCpOrder
// position. Exclusive rows reduce to the single-provider PGF of the matching
// block; mixed rows combine up to three independent batches (pair forwarded
// together, CP1 alone, CP2 alone).
double offspring_pgf_two_cp(const TwoCpParams& params, const TypeLabel& type,
                            const std::vector<double>& s);

}  // namespace vtl

#endif
