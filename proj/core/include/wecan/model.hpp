#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "wecan/family.hpp"
#include "wecan/network.hpp"

namespace wecan {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Cluster labels: 0 is the noise component, 1..K the structural clusters.
/// Per-cluster parameter rows are stored 0-based, so cluster k lives in row
/// k - 1.
using ClusterId = std::size_t;
inline constexpr ClusterId kNoiseCluster = 0;

/// Hyperparameters of the prior, plus the latent dimension and cluster budget.
struct PriorConfig {
  std::size_t p = 4;
  std::size_t K_max = 10;

  Eigen::Matrix2d Psi0_SR1 = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d Psi0_SR2 = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d Psi0_UV = Eigen::Matrix2d::Identity();
  double nu0_SR1 = 3.0;
  double nu0_SR2 = 3.0;
  double nu0_UV = 3.0;

  // Inverse-gamma(a0, b0) on the variance of diag(Lambda_k).
  double a0 = 1.0;
  double b0 = 1.0;
  // Gamma hyperprior on the Dirichlet concentration, a log(alpha) - b alpha.
  double a_alpha = 1.0;
  double b_alpha = 1e4;
  // Beta(c0, d0) on the noise weight t0.
  double c0 = 1.0;
  double d0 = 1.0;
  // Half-t(nu, scale) on each dispersion phi_k.
  double nu0_t = 3.0;
  double eta0_t = 1.0;
  // Symmetric Dirichlet concentration used only by the Dirichlet-MAP
  // mixture-weight option.
  double alpha0_map = 1.0;

  void validate() const;
};

/// Sets each inverse-Wishart scale to variance * (nu0 + count + 3) * I, where
/// count is n for the (S, R) blocks and n p for (U, V). The covariance modes
/// then stay near `variance` whatever the network size instead of collapsing
/// towards Psi0 / (nu0 + count + 3).
PriorConfig data_scaled_prior(PriorConfig prior, std::size_t n_nodes, double variance = 0.3);

/// Every continuous unknown of the model.
struct ModelParams {
  Eigen::VectorXd S1, R1, S2, R2;  // n
  RowMatrix U, V;                  // n x p
  RowMatrix Y;                     // K x p
  RowMatrix Lambda;                // K x p, diagonal of each Lambda_k
  Eigen::VectorXd beta, phi;       // K
  Eigen::Matrix2d Sigma_SR1 = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d Sigma_SR2 = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d Sigma_UV = Eigen::Matrix2d::Identity();
  double lambda = 1.0;  // prior variance of diag(Lambda_k)
  double alpha = 1.0;   // Dirichlet concentration of (t_1..t_K)
  /// Point mixture weights for the Dirichlet-MAP option; empty otherwise.
  Eigen::VectorXd mix_map;

  static ModelParams zeros(std::size_t n, std::size_t K, std::size_t p);

  std::size_t n() const { return static_cast<std::size_t>(S1.size()); }
  std::size_t K() const { return static_cast<std::size_t>(Y.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(Y.cols()); }

  /// Throws DomainError on inconsistent shapes, non-positive dispersions,
  /// non-SPD covariances, or non-finite entries.
  void validate() const;
};

/// Which factors of the edge model are active. The unweighted, noise-free
/// variant is the count-only sub-model used for initialization.
struct ModelVariant {
  bool weighted = true;
  bool noise = true;
};

/// Aggregates that make every likelihood term and gradient O(nKp + MKp).
///
/// Softmax sums are stored in log form with max-subtraction, and the receiver
/// normalizer f_vk - exp(R1_i + V_i Y_k) is stored relative to f_vk as
/// log(1 - pi_ik), clamped below at log(1e-12).
struct Precompute {
  Eigen::VectorXd log_fu, log_fv;  // K
  RowMatrix log_send;              // n x K, log of sender probability
  RowMatrix log_recv;              // n x K, R1_j + V_j Y_k - log f_vk
  RowMatrix log_recv_excl;         // n x K, log(1 - exp(log_recv))
  RowMatrix su_mean, sv_mean;      // K x p, s_uk / f_uk and s_vk / f_vk

  // Responsibility aggregates; empty when built from parameters alone.
  RowMatrix p_send, p_recv;  // n x K
  Eigen::VectorXd p_dot;     // K
  Eigen::VectorXd H_scaled;  // K, f_vk * H_k

  double f_u(std::size_t row) const;
  double f_v(std::size_t row) const;
  Eigen::VectorXd s_u(std::size_t row) const;
  Eigen::VectorXd s_v(std::size_t row) const;
  double H(std::size_t row) const;
};

inline constexpr double kReceiverGuard = 1e-12;

/// Softmax terms only.
Precompute softmax_terms(const ModelParams& params);
/// All fields. `resp` is M x (K + 1) with column 0 the noise component.
Precompute refresh_precompute(const ModelParams& params, const Network& net,
                              const RowMatrix& resp);

/// beta_k + S2_i + R2_j + sum_d U_id Lambda_kd V_jd, for structural k >= 1.
double eta(const ModelParams& params, NodeId i, NodeId j, ClusterId k);

/// log pi(sender = i | cluster k). Noise: -log n.
double sender_log_prob(const ModelParams& params, const Precompute& pre, NodeId i,
                       ClusterId k);
/// log pi(receiver = j | sender = i, cluster k). Noise: -log(n - 1). Returns
/// -inf when j == i.
double receiver_log_prob(const ModelParams& params, const Precompute& pre, NodeId j,
                         NodeId i, ClusterId k);

/// log pi(e_m | Z_mk = 1): sender, receiver and weight factors.
double edge_cluster_log_density(const ModelParams& params, const Precompute& pre,
                                const WeightFamily& family, const NoiseLaw& noise,
                                const Edge& edge, ClusterId k,
                                const ModelVariant& variant = {});

/// M x (K + 1) matrix of edge_cluster_log_density for every edge and cluster.
/// The noise column is -inf when the variant has no noise component or the
/// weight is outside the noise support.
RowMatrix edge_log_densities(const ModelParams& params, const Precompute& pre,
                             const WeightFamily& family, const NoiseLaw& noise,
                             const Network& net, const ModelVariant& variant = {});

/// Log of the complete likelihood f(E, Z | theta) with hard assignments:
/// noise edges weigh t0, structural edges t_k (1 - t0).
double complete_log_likelihood(const ModelParams& params, const WeightFamily& family,
                               const NoiseLaw& noise, const Network& net,
                               std::span<const ClusterId> assignments, double t0,
                               std::span<const double> t,
                               const ModelVariant& variant = {});

}  // namespace wecan
