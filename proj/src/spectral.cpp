#include "spectral.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstdint>

namespace vtl {

Eigen::MatrixXd GeneratorMatrix::mean_matrix() const {
  const Eigen::Index dim = A.rows();
  return A / rate_total + Eigen::MatrixXd::Identity(dim, dim);
}

GeneratorMatrix build_single(const ModelParams& params) {
  require_valid(params);
  const int n = params.levels;
  const double rate = params.rate_total();
  const double theta = params.theta();
  const std::vector<double> c = params.c_vec();

  GeneratorMatrix gen;
  gen.rate_total = rate;
  gen.A = Eigen::MatrixXd::Zero(n, n);
  gen.types.reserve(n);
  for (int l = 1; l <= n; ++l) gen.types.push_back(TypeLabel{l, 0});

  for (int l = 1; l <= n; ++l) {
    for (int k = 1; k <= n; ++k) {
      double entry = c[k - 1] * params.view(l);
      if (k == l) entry -= 1.0;
      if (k == l + 1) entry += theta;
      gen.A(l - 1, k - 1) = rate * entry;
    }
  }
  return gen;
}

GeneratorMatrix build_mixed(const TwoCpParams& params) {
  require_valid(params);
  const int n = params.levels;
  const TwoCpOrder order(n);
  const int dim = order.mixed_count();
  const double rate = params.rate_total();
  const double theta = params.theta();
  const double cmx = params.c_mx();

  GeneratorMatrix gen;
  gen.rate_total = rate;
  gen.A = Eigen::MatrixXd::Zero(dim, dim);
  const auto all = order.types();
  gen.types.assign(all.begin(), all.begin() + dim);

  for (int l = 1; l < n; ++l) {
    const double r = params.view(l);
    for (int i = 1; i < n; ++i) {
      const double keep = cmx * (1.0 - params.p) * params.rho_bar[i - 1] * r;
      const double flip = cmx * params.p * params.rho_bar[i - 1] * r;
      gen.A(order.top(l), order.top(i)) += rate * keep;
      gen.A(order.top(l), order.bottom(i)) += rate * flip;
      gen.A(order.bottom(l), order.bottom(i)) += rate * keep;
      gen.A(order.bottom(l), order.top(i)) += rate * flip;
    }
    gen.A(order.top(l), order.top(l)) -= rate;
    gen.A(order.bottom(l), order.bottom(l)) -= rate;
    if (l < n - 1) {
      gen.A(order.top(l), order.top(l + 1)) += rate * theta;
      gen.A(order.bottom(l), order.bottom(l + 1)) += rate * theta;
    }
  }
  return gen;
}

GeneratorMatrix build_full(const TwoCpParams& params) {
  require_valid(params);
  const int n = params.levels;
  const TwoCpOrder order(n);
  const int dim = order.dim();
  const double rate = params.rate_total();
  const double theta = params.theta();
  const double m = params.friends.mean();
  const double one_minus_theta = 1.0 - theta;

  GeneratorMatrix gen;
  gen.rate_total = rate;
  gen.A = Eigen::MatrixXd::Zero(dim, dim);
  gen.types = order.types();

  // Mixed block.
  const GeneratorMatrix mixed = build_mixed(params);
  gen.A.topLeftCorner(mixed.A.rows(), mixed.A.cols()) = mixed.A;

  // Mixed rows into the exclusive blocks. From a pair with the tracked post
  // on top, the top post is forwarded alone with the full batch mean m*eta
  // when the lower one is not viewed, and with mean m*eta*(1-eta_other)
  // besides the pair when it is. From the bottom position a post is only
  // forwarded (alone) in the delta-branch.
  const double top1 = one_minus_theta * ((1.0 - params.delta) * m * params.eta1 +
                                         params.delta * m * params.eta1 * (1.0 - params.eta2));
  const double top2 = one_minus_theta * ((1.0 - params.delta) * m * params.eta2 +
                                         params.delta * m * params.eta2 * (1.0 - params.eta1));
  const double low1 = one_minus_theta * params.delta * m * params.eta1 * (1.0 - params.eta2);
  const double low2 = one_minus_theta * params.delta * m * params.eta2 * (1.0 - params.eta1);

  for (int l = 1; l < n; ++l) {
    const double r = params.view(l);
    for (int i = 1; i < n; ++i) {
      const double weight = params.rho_bar[i - 1] * r;
      gen.A(order.top(l), order.ex1(i)) += rate * top1 * weight;
      gen.A(order.top(l), order.ex2(i)) += rate * low2 * weight;
      gen.A(order.bottom(l), order.ex2(i)) += rate * top2 * weight;
      gen.A(order.bottom(l), order.ex1(i)) += rate * low1 * weight;
    }
  }
  // At pair level N-1 the shift drops the lower post; the survivor continues
  // as an exclusive TL at level N.
  gen.A(order.top(n - 1), order.ex1(n)) += rate * theta;
  gen.A(order.bottom(n - 1), order.ex2(n)) += rate * theta;

  // Exclusive diagonal blocks.
  for (int cp = 1; cp <= 2; ++cp) {
    const GeneratorMatrix ex = build_single(params.exclusive(cp));
    for (int l = 1; l <= n; ++l)
      for (int k = 1; k <= n; ++k) {
        const int row = cp == 1 ? order.ex1(l) : order.ex2(l);
        const int col = cp == 1 ? order.ex1(k) : order.ex2(k);
        gen.A(row, col) = ex.A(l - 1, k - 1);
      }
  }
  return gen;
}

namespace {

// Strongly connected components of the sparsity pattern (iterative Tarjan),
// returned in reverse topological order of the condensation.
std::vector<std::vector<int>> strongly_connected_components(const Eigen::MatrixXd& m) {
  const int dim = static_cast<int>(m.rows());
  std::vector<std::vector<int>> adj(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (i != j && m(i, j) > 0.0) adj[i].push_back(j);

  std::vector<int> index(dim, -1), low(dim, 0), stack;
  std::vector<bool> on_stack(dim, false);
  std::vector<std::vector<int>> components;
  int counter = 0;

  struct Frame {
    int node;
    std::size_t edge;
  };
  for (int start = 0; start < dim; ++start) {
    if (index[start] != -1) continue;
    std::vector<Frame> frames{{start, 0}};
    index[start] = low[start] = counter++;
    stack.push_back(start);
    on_stack[start] = true;
    while (!frames.empty()) {
      Frame& frame = frames.back();
      const int node = frame.node;
      if (frame.edge < adj[node].size()) {
        const int next = adj[node][frame.edge++];
        if (index[next] == -1) {
          index[next] = low[next] = counter++;
          stack.push_back(next);
          on_stack[next] = true;
          frames.push_back({next, 0});
        } else if (on_stack[next]) {
          low[node] = std::min(low[node], index[next]);
        }
      } else {
        if (low[node] == index[node]) {
          std::vector<int> component;
          while (true) {
            const int popped = stack.back();
            stack.pop_back();
            on_stack[popped] = false;
            component.push_back(popped);
            if (popped == node) break;
          }
          std::sort(component.begin(), component.end());
          components.push_back(std::move(component));
        }
        frames.pop_back();
        if (!frames.empty())
          low[frames.back().node] = std::min(low[frames.back().node], low[node]);
      }
    }
  }
  return components;
}

struct PowerOutcome {
  double sigma = 0.0;
  Eigen::VectorXd vec;
  long iterations = 0;
};

// Power iteration for the dominant eigenpair of a nonnegative matrix,
// stopping on the Rayleigh-quotient change.
PowerOutcome power_iterate(const Eigen::MatrixXd& m, const PerronOptions& opts) {
  const Eigen::Index dim = m.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Constant(dim, 1.0 / static_cast<double>(dim));
  double sigma_prev = 0.0;
  PowerOutcome out;
  for (long it = 1; it <= opts.max_iterations; ++it) {
    Eigen::VectorXd y = m * x;
    const double norm = y.lpNorm<1>();
    if (norm == 0.0) {  // nilpotent direction; dominant root is 0
      out.sigma = 0.0;
      out.vec = x;
      out.iterations = it;
      return out;
    }
    y /= norm;
    const double sigma = x.dot(m * x) / x.squaredNorm();
    x = y;
    if (it > 1 && std::abs(sigma - sigma_prev) <= opts.tol * std::max(1.0, std::abs(sigma))) {
      out.sigma = sigma;
      out.vec = x;
      out.iterations = it;
      return out;
    }
    sigma_prev = sigma;
  }
  throw regime_error("degenerate-dominance",
                     "power iteration did not converge; dominant eigenvalue may be degenerate");
}

// One inverse-iteration polish: amplify the dominant eigendirection of m
// through (m - shift I)^{-1}. Near-singularity is expected and harmless.
Eigen::VectorXd inverse_iterate(const Eigen::MatrixXd& m, double shift, Eigen::VectorXd x) {
  const Eigen::Index dim = m.rows();
  Eigen::MatrixXd shifted = m - shift * Eigen::MatrixXd::Identity(dim, dim);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
  Eigen::VectorXd y = lu.solve(x);
  if (!y.allFinite() || y.lpNorm<1>() == 0.0) return x;  // keep the unpolished vector
  y /= y.lpNorm<1>();
  if (y.sum() < 0.0) y = -y;
  return y;
}

double relative_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& vec, double alpha,
                         bool left) {
  const Eigen::VectorXd err = left ? Eigen::VectorXd(a.transpose() * vec - alpha * vec)
                                   : Eigen::VectorXd(a * vec - alpha * vec);
  const double scale = a.cwiseAbs().rowwise().sum().maxCoeff() *
                       vec.cwiseAbs().maxCoeff();
  return scale > 0.0 ? err.cwiseAbs().maxCoeff() / scale : err.cwiseAbs().maxCoeff();
}

}  // namespace

PerronResult perron(const GeneratorMatrix& gen, const PerronOptions& opts) {
  const Eigen::MatrixXd m = gen.mean_matrix();
  const Eigen::Index dim = m.rows();
  const auto components = strongly_connected_components(m);

  PerronResult result;
  if (components.size() > 1) {
    if (!opts.allow_reducible)
      throw regime_error("reducible",
                         "mean matrix is reducible; positive regularity required "
                         "(pass allow_reducible for block-triangular spectra)");
    double sigma = -1.0;
    long iterations = 0;
    for (const auto& component : components) {
      Eigen::MatrixXd block(component.size(), component.size());
      for (std::size_t i = 0; i < component.size(); ++i)
        for (std::size_t j = 0; j < component.size(); ++j)
          block(i, j) = m(component[i], component[j]);
      const PowerOutcome out = power_iterate(block, opts);
      sigma = std::max(sigma, out.sigma);
      iterations += out.iterations;
    }
    result.sigma = sigma;
    result.alpha = (sigma - 1.0) * gen.rate_total;
    result.irreducible = false;
    result.iterations = iterations;
    return result;
  }

  PowerOutcome right = power_iterate(m, opts);
  PowerOutcome left = power_iterate(m.transpose(), opts);
  Eigen::VectorXd v = right.vec;
  Eigen::VectorXd u = left.vec;
  double sigma = u.dot(m * v) / u.dot(v);

  // Inverse-iteration polish until the defect is at rounding level.
  for (int round = 0; round < 5; ++round) {
    const double defect = std::max(relative_residual(m, v, sigma, false),
                                   relative_residual(m, u, sigma, true));
    if (defect <= 1e-14) break;
    v = inverse_iterate(m, sigma, v);
    u = inverse_iterate(m.transpose(), sigma, u);
    sigma = u.dot(m * v) / u.dot(v);
  }

  if (v.minCoeff() < -1e-9 || u.minCoeff() < -1e-9)
    throw internal_error("Perron eigenvector has negative entries after convergence");
  v = v.cwiseMax(0.0);
  u = u.cwiseMax(0.0);
  v /= v.sum();
  u /= u.dot(v);

  result.sigma = sigma;
  result.alpha = (sigma - 1.0) * gen.rate_total;
  result.irreducible = true;
  result.u = u;
  result.v = v;
  result.iterations = right.iterations + left.iterations;
  result.residual_v = relative_residual(gen.A, v, result.alpha, false);
  result.residual_u = relative_residual(gen.A, u, result.alpha, true);
  if (dim == 1) {
    result.residual_u = result.residual_v = 0.0;
  }
  return result;
}

PositiveRegularity check_positive_regular(const GeneratorMatrix& gen) {
  const Eigen::MatrixXd m = gen.mean_matrix();
  const int dim = static_cast<int>(m.rows());
  const int words = (dim + 63) / 64;
  using Row = std::vector<std::uint64_t>;
  std::vector<Row> base(dim, Row(words, 0));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (m(i, j) > 0.0) base[i][j / 64] |= (std::uint64_t{1} << (j % 64));

  auto all_set = [&](const std::vector<Row>& rows) {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        if (!(rows[i][j / 64] >> (j % 64) & 1)) return false;
    return true;
  };

  std::vector<Row> current = base;
  for (int n = 1; n <= dim; ++n) {
    if (all_set(current)) return {true, n};
    // current <- pattern(current * base)
    std::vector<Row> next(dim, Row(words, 0));
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < dim; ++k)
        if (current[i][k / 64] >> (k % 64) & 1)
          for (int w = 0; w < words; ++w) next[i][w] |= base[k][w];
    if (next == current) return {false, n};
    current = std::move(next);
  }
  return {false, dim};
}

std::pair<double, double> alpha_bounds(const ModelParams& params) {
  require_valid(params);
  const std::vector<double> c = params.c_vec();
  double rc = 0.0;
  for (int l = 1; l <= params.levels; ++l) rc += params.view(l) * c[l - 1];
  const double rate = params.rate_total();
  return {(rc - 1.0) * rate, (rc - 1.0 + params.theta()) * rate};
}

std::pair<double, double> alpha_bounds_mixed(const TwoCpParams& params) {
  require_valid(params);
  double weighted = 0.0;
  for (int l = 1; l < params.levels; ++l) weighted += params.view(l) * params.rho_bar[l - 1];
  const double rc = params.c_mx() * weighted;
  const double rate = params.rate_total();
  return {(rc - 1.0) * rate, (rc - 1.0 + params.theta()) * rate};
}

double alpha_asymptotic(const ModelParams& params, double d1, double d2) {
  require_valid(params);
  for (int l = 1; l <= params.levels; ++l) {
    const double expected = d1 * std::pow(d2, l);
    if (std::abs(params.view(l) - expected) > 1e-12)
      throw config_error("view-probs-not-geometric",
                         "alpha_asymptotic requires view_probs of the form d1*d2^l");
  }
  const std::vector<double> c = params.c_vec();
  double rc = 0.0;
  for (int l = 1; l <= params.levels; ++l) rc += params.view(l) * c[l - 1];
  return (rc - 1.0 + params.theta() * d2) * params.rate_total();
}

double alpha_no_timeline(const ModelParams& params) {
  require_valid(params);
  return (params.friends.batch_mean(params.eta) - 1.0) * params.nu;
}

EigvecResiduals eigvec_residuals(const ModelParams& params, const PerronResult& perron) {
  if (!perron.irreducible || perron.u.size() == 0)
    throw config_error("missing-eigenvectors", "eigvec_residuals needs an irreducible Perron pair");
  const int n = params.levels;
  const double sigma = perron.sigma;
  const double theta = params.theta();
  const std::vector<double> c = params.c_vec();
  const Eigen::VectorXd& u = perron.u;
  const Eigen::VectorXd& v = perron.v;
  const double u_scale = u.cwiseAbs().maxCoeff();
  const double v_scale = v.cwiseAbs().maxCoeff();

  EigvecResiduals res;
  for (int l = 2; l <= n; ++l) {
    double sum = 0.0;
    for (int i = 0; i <= l - 1; ++i)
      sum += params.rho(l - i) / params.rho(1) * std::pow(theta / sigma, i) * u[0];
    res.u_recursion = std::max(res.u_recursion, std::abs(u[l - 1] - sum) / u_scale);
  }
  for (int l = 1; l < n; ++l) {
    double sum = 0.0;
    for (int i = 0; i <= n - l; ++i)
      sum += std::pow(theta / sigma, i) * params.view(l + i) / params.view(n) * v[n - 1];
    res.v_recursion = std::max(res.v_recursion, std::abs(v[l - 1] - sum) / v_scale);
  }
  double ru = 0.0, cv = 0.0;
  for (int l = 1; l <= n; ++l) {
    ru += params.view(l) * u[l - 1];
    cv += c[l - 1] * v[l - 1];
  }
  res.scalar_u = std::abs(c[0] * ru - sigma * u[0]) / (sigma * u_scale);
  res.scalar_v = std::abs(params.view(n) * cv - sigma * v[n - 1]) / (sigma * v_scale);
  return res;
}

MixedEigvecResiduals eigvec_residuals_mixed(const TwoCpParams& params,
                                            const PerronResult& perron) {
  if (!perron.irreducible || perron.u.size() == 0)
    throw config_error("missing-eigenvectors", "eigvec_residuals needs an irreducible Perron pair");
  const int n = params.levels;
  const TwoCpOrder order(n);
  const double sigma = perron.sigma;
  const double theta = params.theta();
  const Eigen::VectorXd& u = perron.u;
  const double u_scale = u.cwiseAbs().maxCoeff();

  MixedEigvecResiduals res;
  for (int l = 2; l < n; ++l) {
    double sum_top = 0.0, sum_bottom = 0.0;
    for (int i = 0; i <= l - 1; ++i) {
      const double weight =
          params.rho_bar[l - i - 1] / params.rho_bar[0] * std::pow(theta / sigma, i);
      sum_top += weight * u[order.top(1)];
      sum_bottom += weight * u[order.bottom(1)];
    }
    res.u_top_recursion =
        std::max(res.u_top_recursion, std::abs(u[order.top(l)] - sum_top) / u_scale);
    res.u_bottom_recursion =
        std::max(res.u_bottom_recursion, std::abs(u[order.bottom(l)] - sum_bottom) / u_scale);
    res.ratio_identity =
        std::max(res.ratio_identity, std::abs(u[order.top(l)] / u[order.top(1)] -
                                              u[order.bottom(l)] / u[order.bottom(1)]));
  }
  return res;
}

}  // namespace vtl
