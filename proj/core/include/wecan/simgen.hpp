#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wecan/model.hpp"
#include "wecan/network.hpp"

namespace wecan {

struct SimConfig {
  std::size_t n_nodes = 150;
  std::size_t n_edges_target = 1200;
  std::size_t K_true = 4;
  double noise_proportion = 0.10;
  std::size_t p = 2;

  // (S1, R1) and (S2, R2) are independent bivariate normal pairs.
  double propensity_variance = 2.0;
  double propensity_correlation = 0.75;

  double vmf_kappa = 50.0;
  double magnitude_shape = 150.0;
  double magnitude_rate = 40.0;
  /// Radius of the circle (sphere, p > 2) carrying the rows of Y.
  double y_radius = 1.0;

  std::vector<double> beta_pool = {-1.0, -2.0, 1.0, 2.0};
  double lambda_magnitude = 0.4;

  double noise_shape = 2.0;
  double noise_rate = 20.0;

  double phi_min = 0.05;
  double phi_max = 0.5;

  std::uint64_t seed = 1;

  /// Throws DomainError when a constraint is violated.
  void validate() const;
};

/// n = 400, M = 7065, four structural clusters.
SimConfig paper_preset();
/// n = 150, M = 1200, four structural clusters.
SimConfig desk_preset();

/// One draw from the von Mises-Fisher distribution on the unit sphere in
/// R^mu.size(), by Wood's rejection scheme. kappa = 0 is uniform.
Eigen::VectorXd sample_vmf(const Eigen::VectorXd& mu, double kappa, std::mt19937_64& rng);

struct Simulation {
  Network network;
  /// True label per edge, 0 for noise.
  std::vector<ClusterId> truth;
  /// Generating parameters with K = K_true. Covariance, lambda and alpha
  /// fields keep their defaults.
  ModelParams params;
  /// Structural cluster weights (uniform).
  std::vector<double> cluster_weights;
  SimConfig config;
};

Simulation generate(const SimConfig& config);

}  // namespace wecan
