#pragma once

#include <cstdint>
#include <vector>

#include "wecan/estimation.hpp"
#include "wecan/fit.hpp"

namespace wecan {

/// Random start for the count-only model: S1, R1 from centered log(1 + degree);
/// Y_k uniform on the unit sphere; U_i = radius Y_a + noise and
/// V_i = radius Y_b + noise for clusters a, b drawn uniformly per node, noise
/// Normal(0, scale^2); remaining blocks from init_remaining.
ModelParams random_start(const FitContext& ctx, std::uint64_t seed, double scale, double radius);

struct InitResult {
  ModelParams params;
  /// M x (K + 1) with a zero noise column.
  RowMatrix resp;
  std::vector<ClusterId> assignments;
  std::vector<double> elbo_trace;
  std::size_t n_outer_iterations = 0;
  bool converged = false;
};

/// Fits the count-only, noise-free sub-model (weights ignored) with the same
/// VB-GEM machinery and returns its S1, R1, U, V, Y, Sigma_SR1, Sigma_UV,
/// alpha and responsibilities.
InitResult init_unweighted(const FitContext& ctx, const FitOptions& options, std::uint64_t seed);

struct WeightInit {
  Eigen::VectorXd S2, R2;
  double phi = 1.0;
};

inline constexpr double kMinInitialDispersion = 1e-3;

/// S2_i = log(1 + out-weight of i), R2_j = log(1 + in-weight of j), both
/// centered; phi = sample sd of y(w), floored at 1e-3. Weight sums use y(w)
/// (log weights for the log-normal family). A negative sum s maps to
/// -log(1 + |s|) so signed normal weights stay well defined.
WeightInit init_weight_params(const Network& net, const WeightFamily& family);

struct RemainingInit {
  RowMatrix Lambda;
  Eigen::VectorXd beta;
  Eigen::Matrix2d Sigma_SR1, Sigma_SR2, Sigma_UV;
  double lambda = 1.0;
  double alpha = 1.0;
};

/// Lambda = 0, beta_k ~ Normal(mean y, 0.1^2), Sigma blocks at Psi0 / (nu0 + 3),
/// lambda = b0 / (a0 + 1), alpha = a_alpha / b_alpha.
RemainingInit init_remaining(const FitContext& ctx, std::uint64_t seed);

/// Full WECAN start: pre-fit count structure (Y rescaled to unit RMS over the
/// live clusters, U and V scaled inversely) plus weight and remaining blocks.
/// Returns parameters and responsibilities (zero noise column).
InitResult initialize(const FitContext& ctx, const FitOptions& options, std::uint64_t seed);

}  // namespace wecan
