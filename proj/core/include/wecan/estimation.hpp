#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wecan/family.hpp"
#include "wecan/model.hpp"
#include "wecan/network.hpp"

namespace wecan {

/// How the structural mixture weights (t_1..t_K) are handled.
enum class MixtureMode {
  /// Variational Dirichlet q(t) with a Gamma-hyperprior concentration
  /// updated by 1-D Newton. Default.
  kSparseFinite,
  /// Point weights set to the Dirichlet(alpha0_map) posterior mode.
  kDirichletMap,
};

/// Everything that stays fixed for the duration of a fit.
struct FitContext {
  FitContext(const Network& net, WeightFamily family, NoiseLaw noise, PriorConfig prior,
             ModelVariant variant = {}, MixtureMode mixture = MixtureMode::kSparseFinite);

  const Network& net;
  WeightFamily family;
  NoiseLaw noise;
  PriorConfig prior;
  ModelVariant variant;
  MixtureMode mixture;
  /// Sufficient statistic y(w_m) and log-Jacobian per edge (weighted only).
  std::vector<double> y;
  std::vector<double> log_jacobian;

  std::size_t K() const { return prior.K_max; }
  std::size_t p() const { return prior.p; }
  FitContext with_variant(ModelVariant v) const;
};

/// Mean-field posterior over (Z, t0, t).
struct VariationalState {
  RowMatrix resp;             // M x (K + 1), column 0 = noise
  double t0_a = 1.0;          // q(t0) = Beta(t0_a, t0_b)
  double t0_b = 1.0;
  Eigen::VectorXd dir;        // q(t) = Dirichlet(dir)
  double e_log_t0 = 0.0;      // E[log t0]
  double e_log_1mt0 = 0.0;    // E[log(1 - t0)]
  Eigen::VectorXd e_log_t;    // E[log t_k]

  /// Recomputes the digamma expectations from (t0_a, t0_b, dir).
  void refresh_expectations();
  /// Variational means of t0 and (t_1..t_K).
  double mean_t0() const;
  Eigen::VectorXd mean_t() const;
};

/// Starting state for given responsibilities: q(t0) at its prior, q(t) at
/// Dirichlet(alpha + column masses).
VariationalState initial_state(const FitContext& ctx, const ModelParams& params, RowMatrix resp);

/// ELBO split into its pieces. Constants that do not depend on any unknown
/// (normalizers of the theta priors) are omitted.
struct ElboTerms {
  double data = 0.0;         // sum_m sum_k p_mk (log density + E log mixture weight)
  double entropy_z = 0.0;    // -sum p_mk log p_mk
  double t_prior = 0.0;      // E log Beta(t0) + E log Dirichlet(t), normalized
  double t_entropy = 0.0;    // entropy of q(t0) and q(t)
  double alpha_prior = 0.0;  // a_alpha log alpha - b_alpha alpha
  double theta_prior = 0.0;  // MVN, inverse-Wishart, Y, Lambda, lambda, half-t terms

  double total() const {
    return data + entropy_z + t_prior + t_entropy + alpha_prior + theta_prior;
  }
  /// Expected log posterior E_q log f(theta, Z, t | E): the M-step objective.
  double expected_log_posterior() const { return data + t_prior + alpha_prior + theta_prior; }
};

ElboTerms elbo_terms(const FitContext& ctx, const ModelParams& params,
                     const VariationalState& state);
double elbo(const FitContext& ctx, const ModelParams& params, const VariationalState& state);
/// Q(theta) for fixed q; differs from the ELBO only by q's entropies.
double q_function(const FitContext& ctx, const ModelParams& params,
                  const VariationalState& state);
/// theta_prior component alone.
double theta_log_prior(const FitContext& ctx, const ModelParams& params);

struct EStepOptions {
  double tol = 1e-6;  // relative ELBO change
  std::size_t max_iter = 100;
  /// Record the ELBO after every coordinate update (Z, t0, t).
  bool trace_coordinates = false;
};

struct EStepResult {
  VariationalState state;
  std::size_t iterations = 0;
  double elbo = 0.0;
  std::vector<double> coordinate_trace;  // input ELBO first, when requested
};

/// Coordinate ascent on q(Z), q(t0), q(t) in that order until the relative
/// ELBO change falls below tol. Each update is the exact coordinate maximizer,
/// so the ELBO never decreases.
EStepResult e_step(const FitContext& ctx, const ModelParams& params, VariationalState state,
                   const EStepOptions& options = {});

/// dQ/dtheta for the conjugate-gradient block. `phi` holds dQ/dphi on the
/// natural scale; blocks absent from the variant are zero.
struct Gradient {
  Eigen::VectorXd S1, R1, S2, R2;
  RowMatrix U, V, Y, Lambda;
  Eigen::VectorXd beta, phi;
};

Gradient m_step_gradients(const FitContext& ctx, const ModelParams& params,
                          const VariationalState& state);

struct LineSearchOptions {
  double armijo_c = 1e-4;
  double shrink = 0.5;
  std::size_t max_backtracks = 30;
};

struct MStepOptions {
  std::size_t cg_iters = 5;
  LineSearchOptions line_search;
};

struct MStepReport {
  ModelParams params;
  std::size_t cg_iterations = 0;
  bool line_search_failed = false;
};

/// Generalized M-step: Polak-Ribiere+ conjugate gradient on the CG block
/// (phi in log space) with Armijo backtracking, then the closed-form
/// covariance and lambda modes, then the mixture concentration.
MStepReport m_step(const FitContext& ctx, const ModelParams& params,
                   const VariationalState& state, const MStepOptions& options = {});

/// sum_i (a_i, b_i)^T (a_i, b_i).
Eigen::Matrix2d pair_scatter(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
/// sum_i sum_d (U_id, V_id)^T (U_id, V_id).
Eigen::Matrix2d latent_scatter(const RowMatrix& U, const RowMatrix& V);
/// Mode of the inverse-Wishart full conditional: (psi0 + scatter) / (nu0 + count + 3).
Eigen::Matrix2d covariance_mode(const Eigen::Matrix2d& psi0, double nu0,
                                const Eigen::Matrix2d& scatter, double count);
/// (b0 + 0.5 sum_k |diag Lambda_k|^2) / (a0 + K p / 2 + 1).
double lambda_mode(const PriorConfig& prior, const RowMatrix& Lambda);
/// Maximizer over alpha > 0 of
///   log Gamma(K alpha) - K log Gamma(alpha) + (alpha - 1) sum_k E log t_k
///   + a_alpha log alpha - b_alpha alpha.
double concentration_update(const Eigen::VectorXd& e_log_t, const PriorConfig& prior);
/// Dirichlet-MAP weights (alpha0 + n_k - 1)_+ / sum, n_k = sum_m p_mk.
Eigen::VectorXd dirichlet_map_weights(const RowMatrix& resp, double alpha0);

/// Row-wise argmax of the responsibilities; ties go to the lowest index, so
/// an all-equal row is assigned to noise.
std::vector<ClusterId> hard_assignments(const RowMatrix& resp);

enum class Convergence { kContinue, kConverged, kMaxIterReached };

Convergence check_convergence(const std::vector<ClusterId>& previous,
                              const std::vector<ClusterId>& current, std::size_t iter,
                              std::size_t max_iter);

struct PruneResult {
  std::size_t K_effective = 0;
  /// Old cluster id -> new dense id, or kPruned. Noise maps to 0.
  std::vector<ClusterId> old_to_new;
  /// New id -> old id; entry 0 is noise.
  std::vector<ClusterId> new_to_old;
  static constexpr ClusterId kPruned = static_cast<ClusterId>(-1);
};

/// Structural cluster k is occupied iff sum_m p_mk >= mass_threshold.
PruneResult prune_and_count(const VariationalState& state, double mass_threshold = 1.0);

/// Dense labels after pruning. Edges whose argmax is a pruned cluster move to
/// their best surviving cluster.
std::vector<ClusterId> relabel(const RowMatrix& resp, const PruneResult& prune);

/// Number of free parameters counted by the ICL penalty for `k_occupied`
/// structural clusters.
double icl_parameter_count(const FitContext& ctx, std::size_t k_occupied);

/// Complete-data log-likelihood at hard assignments and plug-in mixture
/// weights (cluster proportions), minus 0.5 d log M with d counting only the
/// occupied clusters. `assignments` use the original cluster ids 0..K.
double icl(const FitContext& ctx, const ModelParams& params,
           const std::vector<ClusterId>& assignments);

}  // namespace wecan
