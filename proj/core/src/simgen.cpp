#include "wecan/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wecan/error.hpp"

namespace wecan {

void SimConfig::validate() const {
  if (n_nodes < 2) throw DomainError("simulation needs at least 2 nodes");
  if (n_edges_target < 1) throw DomainError("simulation needs at least 1 edge");
  if (K_true < 1) throw DomainError("K_true must be at least 1");
  if (!(noise_proportion >= 0.0 && noise_proportion < 1.0))
    throw DomainError("noise proportion must lie in [0, 1)");
  if (p < 1) throw DomainError("p must be at least 1");
  if (!(propensity_variance > 0.0)) throw DomainError("propensity variance must be positive");
  if (!(std::abs(propensity_correlation) < 1.0))
    throw DomainError("propensity correlation must lie in (-1, 1)");
  if (!(vmf_kappa >= 0.0)) throw DomainError("vMF concentration must be non-negative");
  if (!(magnitude_shape > 0.0 && magnitude_rate > 0.0))
    throw DomainError("magnitude gamma parameters must be positive");
  if (!(y_radius > 0.0)) throw DomainError("Y radius must be positive");
  if (K_true > beta_pool.size())
    throw DomainError("K_true exceeds the beta pool (sampled without replacement)");
  if (!(noise_shape > 0.0 && noise_rate > 0.0))
    throw DomainError("noise gamma parameters must be positive");
  if (!(phi_min > 0.0 && phi_max >= phi_min)) throw DomainError("invalid dispersion range");
}

SimConfig paper_preset() {
  SimConfig c;
  c.n_nodes = 400;
  c.n_edges_target = 7065;
  return c;
}

SimConfig desk_preset() { return SimConfig{}; }

Eigen::VectorXd sample_vmf(const Eigen::VectorXd& mu, double kappa, std::mt19937_64& rng) {
  if (!(kappa >= 0.0)) throw DomainError("vMF concentration must be non-negative");
  const auto dim = mu.size();
  if (dim < 1 || std::abs(mu.norm() - 1.0) > 1e-9) throw DomainError("vMF mean must be a unit vector");

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (dim == 1) {
    // Two-point distribution on {-1, +1}.
    const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * kappa));
    return mu * (unif(rng) < p_plus ? 1.0 : -1.0);
  }

  const double d1 = static_cast<double>(dim - 1);
  double w;
  if (kappa == 0.0) {
    std::gamma_distribution<double> ga(d1 / 2.0, 1.0), gb(d1 / 2.0, 1.0);
    const double a = ga(rng), b = gb(rng);
    w = 2.0 * a / (a + b) - 1.0;
  } else {
    const double b = d1 / (std::sqrt(4.0 * kappa * kappa + d1 * d1) + 2.0 * kappa);
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + d1 * std::log(1.0 - x0 * x0);
    std::gamma_distribution<double> ga(d1 / 2.0, 1.0), gb(d1 / 2.0, 1.0);
    while (true) {
      const double ya = ga(rng), yb = gb(rng);
      const double z = ya / (ya + yb);
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double u = unif(rng);
      if (kappa * w + d1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }
  }

  // Uniform direction orthogonal to mu.
  Eigen::VectorXd v(dim);
  double vn = 0.0;
  do {
    for (Eigen::Index d = 0; d < dim; ++d) v(d) = gauss(rng);
    v -= mu * mu.dot(v);
    vn = v.norm();
  } while (vn < 1e-12);
  v /= vn;
  Eigen::VectorXd out = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  return out / out.norm();
}

namespace {

Eigen::Vector2d bivariate_normal(double variance, double rho, std::normal_distribution<double>& g,
                                 std::mt19937_64& rng) {
  const double sd = std::sqrt(variance);
  const double z1 = g(rng), z2 = g(rng);
  return {sd * z1, sd * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2)};
}

// Cluster directions on a circle for p = 2; for other p, spread by a fixed
// pattern then normalized (the circle only exists at p = 2).
Eigen::VectorXd cluster_direction(std::size_t k, std::size_t K, std::size_t p) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(K);
  if (p == 1) {
    y(0) = k % 2 == 0 ? 1.0 : -1.0;
    return y;
  }
  y(0) = std::cos(angle);
  y(1) = std::sin(angle);
  return y;
}

std::vector<double> softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  std::vector<double> out(static_cast<std::size_t>(logits.size()));
  double s = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) s += out[static_cast<std::size_t>(i)] = std::exp(logits(i) - mx);
  for (double& v : out) v /= s;
  return out;
}

}  // namespace

Simulation generate(const SimConfig& config) {
  config.validate();
  const std::size_t n = config.n_nodes;
  const std::size_t K = config.K_true;
  const std::size_t p = config.p;
  const auto ni = static_cast<Eigen::Index>(n);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ModelParams params = ModelParams::zeros(n, K, p);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const Eigen::Vector2d a = bivariate_normal(config.propensity_variance, config.propensity_correlation, gauss, rng);
    params.S1(i) = a(0);
    params.R1(i) = a(1);
  }
  for (Eigen::Index i = 0; i < ni; ++i) {
    const Eigen::Vector2d a = bivariate_normal(config.propensity_variance, config.propensity_correlation, gauss, rng);
    params.S2(i) = a(0);
    params.R2(i) = a(1);
  }

  std::vector<Eigen::VectorXd> dirs(K);
  for (std::size_t k = 0; k < K; ++k) {
    dirs[k] = cluster_direction(k, K, p);
    params.Y.row(static_cast<Eigen::Index>(k)) = config.y_radius * dirs[k].transpose();
  }

  std::uniform_int_distribution<std::size_t> pick_cluster(0, K - 1);
  std::gamma_distribution<double> magnitude(config.magnitude_shape, 1.0 / config.magnitude_rate);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const std::size_t c = pick_cluster(rng);
    params.U.row(i) = magnitude(rng) * sample_vmf(dirs[c], config.vmf_kappa, rng).transpose();
    params.V.row(i) = magnitude(rng) * sample_vmf(dirs[c], config.vmf_kappa, rng).transpose();
  }

  std::vector<double> pool = config.beta_pool;
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t k = 0; k < K; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    params.beta(kk) = pool[k];
    // Sign pattern by binary order: cluster 0 all +, cluster 1 flips the last
    // coordinate, and so on.
    const std::size_t pattern = k % (std::size_t{1} << std::min<std::size_t>(p, 30));
    for (std::size_t d = 0; d < p; ++d) {
      const bool negative = (pattern >> (p - 1 - d)) & 1U;
      params.Lambda(kk, static_cast<Eigen::Index>(d)) =
          negative ? -config.lambda_magnitude : config.lambda_magnitude;
    }
  }
  std::uniform_real_distribution<double> phi_law(config.phi_min, config.phi_max);
  for (std::size_t k = 0; k < K; ++k) params.phi(static_cast<Eigen::Index>(k)) = phi_law(rng);

  std::vector<std::discrete_distribution<std::size_t>> send(K), recv(K);
  std::vector<std::vector<double>> recv_prob(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::VectorXd yk = params.Y.row(static_cast<Eigen::Index>(k)).transpose();
    const std::vector<double> ps = softmax(params.S1 + params.U * yk);
    recv_prob[k] = softmax(params.R1 + params.V * yk);
    send[k] = std::discrete_distribution<std::size_t>(ps.begin(), ps.end());
    recv[k] = std::discrete_distribution<std::size_t>(recv_prob[k].begin(), recv_prob[k].end());
  }

  std::uniform_int_distribution<std::size_t> any_node(0, n - 1);
  std::uniform_int_distribution<std::size_t> other_node(0, n - 2);
  std::gamma_distribution<double> noise_weight(config.noise_shape, 1.0 / config.noise_rate);

  std::vector<Edge> edges;
  std::vector<ClusterId> truth;
  edges.reserve(config.n_edges_target);
  truth.reserve(config.n_edges_target);
  for (std::size_t m = 0; m < config.n_edges_target; ++m) {
    if (unif(rng) < config.noise_proportion) {
      const NodeId i = any_node(rng);
      NodeId j = other_node(rng);
      if (j >= i) ++j;
      edges.push_back({i, j, noise_weight(rng)});
      truth.push_back(kNoiseCluster);
      continue;
    }
    const std::size_t k = pick_cluster(rng);
    const NodeId i = send[k](rng);
    NodeId j;
    if (recv_prob[k][i] < 0.999) {
      do j = recv[k](rng);
      while (j == i);
    } else {
      std::vector<double> w = recv_prob[k];
      w[i] = 0.0;
      j = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
    }
    const ClusterId cluster = k + 1;
    const double mean = eta(params, i, j, cluster);
    const double w = mean + params.phi(static_cast<Eigen::Index>(k)) * gauss(rng);
    edges.push_back({i, j, w});
    truth.push_back(cluster);
  }

  Simulation sim{Network(n, std::move(edges)), std::move(truth), std::move(params),
                 std::vector<double>(K, 1.0 / static_cast<double>(K)), config};
  return sim;
}

}  // namespace wecan
