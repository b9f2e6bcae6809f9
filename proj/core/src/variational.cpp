#include <algorithm>
#include <cmath>
#include <limits>

#include "special.hpp"
#include "wecan/error.hpp"
#include "wecan/estimation.hpp"

namespace wecan {

using detail::digamma;
using detail::lbeta;
using detail::lgamma;

FitContext::FitContext(const Network& net_, WeightFamily family_, NoiseLaw noise_,
                       PriorConfig prior_, ModelVariant variant_, MixtureMode mixture_)
    : net(net_),
      family(family_),
      noise(noise_),
      prior(std::move(prior_)),
      variant(variant_),
      mixture(mixture_) {
  prior.validate();
  if (variant.weighted) {
    y.reserve(net.n_edges());
    log_jacobian.reserve(net.n_edges());
    for (std::size_t m = 0; m < net.n_edges(); ++m) {
      const double w = net.edge(m).weight;
      if (!family.in_support(w))
        throw DomainError("edge " + std::to_string(m) + " weight " + std::to_string(w) +
                          " outside the " + std::string(to_string(family.kind())) + " support");
      const double t = family.transform(w);
      y.push_back(t);
      log_jacobian.push_back(family.kind() == FamilyKind::kLogNormal ? -t : 0.0);
    }
  }
}

FitContext FitContext::with_variant(ModelVariant v) const {
  return FitContext(net, family, noise, prior, v, mixture);
}

void VariationalState::refresh_expectations() {
  const double ab = digamma(t0_a + t0_b);
  e_log_t0 = digamma(t0_a) - ab;
  e_log_1mt0 = digamma(t0_b) - ab;
  const double total = digamma(dir.sum());
  e_log_t.resize(dir.size());
  for (Eigen::Index k = 0; k < dir.size(); ++k) e_log_t(k) = digamma(dir(k)) - total;
}

double VariationalState::mean_t0() const { return t0_a / (t0_a + t0_b); }

Eigen::VectorXd VariationalState::mean_t() const { return dir / dir.sum(); }

VariationalState initial_state(const FitContext& ctx, const ModelParams& params, RowMatrix resp) {
  VariationalState s;
  const auto K = static_cast<Eigen::Index>(ctx.K());
  if (resp.rows() != static_cast<Eigen::Index>(ctx.net.n_edges()) || resp.cols() != K + 1)
    throw DomainError("responsibility matrix must be M x (K + 1)");
  s.resp = std::move(resp);
  s.t0_a = ctx.prior.c0;
  s.t0_b = ctx.prior.d0;
  s.dir = (s.resp.rightCols(K).colwise().sum().transpose().array() + params.alpha).matrix();
  s.refresh_expectations();
  return s;
}

namespace {

// Log mixture weight expectation per column of resp.
Eigen::VectorXd mixture_log_weights(const FitContext& ctx, const ModelParams& params,
                                    const VariationalState& state) {
  const auto K = static_cast<Eigen::Index>(ctx.K());
  Eigen::VectorXd mix(K + 1);
  const bool noise = ctx.variant.noise;
  mix(0) = noise ? state.e_log_t0 : 0.0;
  const double structural = noise ? state.e_log_1mt0 : 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (ctx.mixture == MixtureMode::kSparseFinite) {
      mix(k + 1) = state.e_log_t(k) + structural;
    } else {
      const double w = params.mix_map(k);
      mix(k + 1) = (w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) + structural;
    }
  }
  return mix;
}

double data_term(const RowMatrix& L, const Eigen::VectorXd& mix, const RowMatrix& resp) {
  double total = 0.0;
  for (Eigen::Index m = 0; m < resp.rows(); ++m) {
    for (Eigen::Index k = 0; k < resp.cols(); ++k) {
      const double p = resp(m, k);
      if (p > 0.0) total += p * (L(m, k) + mix(k));
    }
  }
  return total;
}

double z_entropy(const RowMatrix& resp) {
  double h = 0.0;
  for (Eigen::Index m = 0; m < resp.rows(); ++m)
    for (Eigen::Index k = 0; k < resp.cols(); ++k) {
      const double p = resp(m, k);
      if (p > 0.0) h -= p * std::log(p);
    }
  return h;
}

struct MixtureTerms {
  double prior = 0.0;
  double entropy = 0.0;
  double alpha_prior = 0.0;
};

MixtureTerms mixture_terms(const FitContext& ctx, const ModelParams& params,
                           const VariationalState& state) {
  MixtureTerms t;
  const PriorConfig& pr = ctx.prior;
  if (ctx.variant.noise) {
    const double a = state.t0_a;
    const double b = state.t0_b;
    t.prior += (pr.c0 - 1.0) * state.e_log_t0 + (pr.d0 - 1.0) * state.e_log_1mt0 -
               lbeta(pr.c0, pr.d0);
    t.entropy += lbeta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) +
                 (a + b - 2.0) * digamma(a + b);
  }
  const auto K = static_cast<double>(ctx.K());
  if (ctx.mixture == MixtureMode::kSparseFinite) {
    const double alpha = params.alpha;
    t.prior += lgamma(K * alpha) - K * lgamma(alpha) + (alpha - 1.0) * state.e_log_t.sum();
    const double g0 = state.dir.sum();
    double lb = -lgamma(g0);
    double cross = 0.0;
    for (Eigen::Index k = 0; k < state.dir.size(); ++k) {
      lb += lgamma(state.dir(k));
      cross += (state.dir(k) - 1.0) * state.e_log_t(k);
    }
    t.entropy += lb - cross;
    t.alpha_prior = pr.a_alpha * std::log(alpha) - pr.b_alpha * alpha;
  } else {
    for (Eigen::Index k = 0; k < params.mix_map.size(); ++k)
      if (params.mix_map(k) > 0.0) t.prior += (pr.alpha0_map - 1.0) * std::log(params.mix_map(k));
  }
  return t;
}

double mvn_pair_prior(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      const Eigen::Matrix2d& sigma, const Eigen::Matrix2d& psi0, double nu0) {
  const Eigen::Matrix2d prec = sigma.inverse();
  const double logdet = std::log(sigma.determinant());
  const double n = static_cast<double>(a.size());
  const double quad = prec(0, 0) * a.squaredNorm() + 2.0 * prec(0, 1) * a.dot(b) +
                      prec(1, 1) * b.squaredNorm();
  return -0.5 * quad - 0.5 * n * logdet - 0.5 * (nu0 + 3.0) * logdet -
         0.5 * (psi0 * prec).trace();
}

}  // namespace

double theta_log_prior(const FitContext& ctx, const ModelParams& params) {
  const PriorConfig& pr = ctx.prior;
  double total = mvn_pair_prior(params.S1, params.R1, params.Sigma_SR1, pr.Psi0_SR1, pr.nu0_SR1);
  {
    // (U_i, V_i) ~ MVN(0, Sigma_UV (x) I_p): p independent pairs per node.
    const Eigen::Matrix2d prec = params.Sigma_UV.inverse();
    const double logdet = std::log(params.Sigma_UV.determinant());
    const double np = static_cast<double>(params.U.size());
    const double quad = prec(0, 0) * params.U.squaredNorm() +
                        2.0 * prec(0, 1) * (params.U.array() * params.V.array()).sum() +
                        prec(1, 1) * params.V.squaredNorm();
    total += -0.5 * quad - 0.5 * np * logdet - 0.5 * (pr.nu0_UV + 3.0) * logdet -
             0.5 * (pr.Psi0_UV * prec).trace();
  }
  total -= 0.5 * params.Y.squaredNorm();
  if (ctx.variant.weighted) {
    total += mvn_pair_prior(params.S2, params.R2, params.Sigma_SR2, pr.Psi0_SR2, pr.nu0_SR2);
    const double Kp = static_cast<double>(params.Lambda.size());
    total += -(params.Lambda.squaredNorm() + 2.0 * pr.b0) / (2.0 * params.lambda) -
             (pr.a0 + 1.0 + 0.5 * Kp) * std::log(params.lambda);
    const double scale = pr.nu0_t * pr.eta0_t * pr.eta0_t;
    for (Eigen::Index k = 0; k < params.phi.size(); ++k)
      total -= 0.5 * (pr.nu0_t + 1.0) * std::log1p(params.phi(k) * params.phi(k) / scale);
  }
  return total;
}

ElboTerms elbo_terms(const FitContext& ctx, const ModelParams& params,
                     const VariationalState& state) {
  const Precompute pre = softmax_terms(params);
  const RowMatrix L = edge_log_densities(params, pre, ctx.family, ctx.noise, ctx.net, ctx.variant);
  ElboTerms t;
  t.data = data_term(L, mixture_log_weights(ctx, params, state), state.resp);
  t.entropy_z = z_entropy(state.resp);
  const MixtureTerms mt = mixture_terms(ctx, params, state);
  t.t_prior = mt.prior;
  t.t_entropy = mt.entropy;
  t.alpha_prior = mt.alpha_prior;
  t.theta_prior = theta_log_prior(ctx, params);
  return t;
}

double elbo(const FitContext& ctx, const ModelParams& params, const VariationalState& state) {
  return elbo_terms(ctx, params, state).total();
}

double q_function(const FitContext& ctx, const ModelParams& params,
                  const VariationalState& state) {
  return elbo_terms(ctx, params, state).expected_log_posterior();
}

EStepResult e_step(const FitContext& ctx, const ModelParams& params, VariationalState state,
                   const EStepOptions& options) {
  const Precompute pre = softmax_terms(params);
  const RowMatrix L = edge_log_densities(params, pre, ctx.family, ctx.noise, ctx.net, ctx.variant);
  const auto M = L.rows();
  const auto K = static_cast<Eigen::Index>(ctx.K());
  const double theta_prior = theta_log_prior(ctx, params);
  const bool sparse = ctx.mixture == MixtureMode::kSparseFinite;

  for (Eigen::Index m = 0; m < M; ++m) {
    bool any = false;
    for (Eigen::Index k = 0; k <= K; ++k) {
      if (std::isnan(L(m, k)) || L(m, k) == std::numeric_limits<double>::infinity())
        throw NumericalError("non-finite log-density at edge " + std::to_string(m) +
                             ", cluster " + std::to_string(k));
      any = any || std::isfinite(L(m, k));
    }
    if (!any) throw NumericalError("edge " + std::to_string(m) + " has zero density in every cluster");
  }

  auto current_elbo = [&]() {
    const MixtureTerms mt = mixture_terms(ctx, params, state);
    return data_term(L, mixture_log_weights(ctx, params, state), state.resp) +
           z_entropy(state.resp) + mt.prior + mt.entropy + mt.alpha_prior + theta_prior;
  };

  EStepResult result;
  double prev = current_elbo();
  if (options.trace_coordinates) result.coordinate_trace.push_back(prev);

  for (std::size_t it = 0; it < options.max_iter; ++it) {
    // q(Z)
    const Eigen::VectorXd mix = mixture_log_weights(ctx, params, state);
    for (Eigen::Index m = 0; m < M; ++m) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k <= K; ++k) mx = std::max(mx, L(m, k) + mix(k));
      double sum = 0.0;
      for (Eigen::Index k = 0; k <= K; ++k) {
        const double v = L(m, k) + mix(k);
        const double e = std::isfinite(v) ? std::exp(v - mx) : 0.0;
        state.resp(m, k) = e;
        sum += e;
      }
      state.resp.row(m) /= sum;
    }
    if (options.trace_coordinates) result.coordinate_trace.push_back(current_elbo());

    // q(t0)
    if (ctx.variant.noise) {
      const double noise_mass = state.resp.col(0).sum();
      state.t0_a = ctx.prior.c0 + noise_mass;
      state.t0_b = ctx.prior.d0 + static_cast<double>(M) - noise_mass;
      state.refresh_expectations();
      if (options.trace_coordinates) result.coordinate_trace.push_back(current_elbo());
    }

    // q(t)
    if (sparse) {
      state.dir = (state.resp.rightCols(K).colwise().sum().transpose().array() + params.alpha).matrix();
      state.refresh_expectations();
      if (options.trace_coordinates) result.coordinate_trace.push_back(current_elbo());
    }

    const double cur = current_elbo();
    result.iterations = it + 1;
    const bool done = std::abs(cur - prev) < options.tol * std::max(1.0, std::abs(cur));
    prev = cur;
    if (done) break;
  }
  result.elbo = prev;
  result.state = std::move(state);
  return result;
}

std::vector<ClusterId> hard_assignments(const RowMatrix& resp) {
  std::vector<ClusterId> out(static_cast<std::size_t>(resp.rows()));
  for (Eigen::Index m = 0; m < resp.rows(); ++m) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < resp.cols(); ++k)
      if (resp(m, k) > resp(m, best)) best = k;
    out[static_cast<std::size_t>(m)] = static_cast<ClusterId>(best);
  }
  return out;
}

Convergence check_convergence(const std::vector<ClusterId>& previous,
                              const std::vector<ClusterId>& current, std::size_t iter,
                              std::size_t max_iter) {
  if (previous.size() != current.size())
    throw DomainError("assignment vectors differ in length");
  if (previous == current) return Convergence::kConverged;
  if (iter >= max_iter) return Convergence::kMaxIterReached;
  return Convergence::kContinue;
}

PruneResult prune_and_count(const VariationalState& state, double mass_threshold) {
  if (mass_threshold < 0.0) throw DomainError("mass threshold must be non-negative");
  const Eigen::Index K = state.resp.cols() - 1;
  PruneResult r;
  r.old_to_new.assign(static_cast<std::size_t>(K + 1), PruneResult::kPruned);
  r.old_to_new[0] = 0;
  r.new_to_old.push_back(0);
  for (Eigen::Index k = 1; k <= K; ++k) {
    if (state.resp.col(k).sum() >= mass_threshold) {
      r.old_to_new[static_cast<std::size_t>(k)] = r.new_to_old.size();
      r.new_to_old.push_back(static_cast<ClusterId>(k));
    }
  }
  r.K_effective = r.new_to_old.size() - 1;
  return r;
}

std::vector<ClusterId> relabel(const RowMatrix& resp, const PruneResult& prune) {
  std::vector<ClusterId> out(static_cast<std::size_t>(resp.rows()));
  for (Eigen::Index m = 0; m < resp.rows(); ++m) {
    // Best surviving column; noise always survives.
    ClusterId best_new = 0;
    double best = resp(m, 0);
    for (std::size_t c = 1; c < prune.new_to_old.size(); ++c) {
      const double v = resp(m, static_cast<Eigen::Index>(prune.new_to_old[c]));
      if (v > best) {
        best = v;
        best_new = c;
      }
    }
    out[static_cast<std::size_t>(m)] = best_new;
  }
  return out;
}

double icl_parameter_count(const FitContext& ctx, std::size_t k_occupied) {
  const double n = static_cast<double>(ctx.net.n_nodes());
  const double p = static_cast<double>(ctx.p());
  const double k = static_cast<double>(k_occupied);
  double d = 2.0 * n + 2.0 * n * p + k * p + k;  // S1, R1, U, V, Y_k, mixture weights
  if (ctx.variant.weighted) d += 2.0 * n + k * (p + 2.0);  // S2, R2, Lambda_k, beta_k, phi_k
  if (ctx.variant.noise) d += 1.0;                          // t0
  return d;
}

double icl(const FitContext& ctx, const ModelParams& params,
           const std::vector<ClusterId>& assignments) {
  const std::size_t M = ctx.net.n_edges();
  const std::size_t K = params.K();
  std::vector<double> counts(K + 1, 0.0);
  for (ClusterId c : assignments) {
    if (c > K) throw DomainError("assignment out of range");
    counts[c] += 1.0;
  }
  const double structural = static_cast<double>(M) - counts[0];
  std::vector<double> t(K, 0.0);
  std::size_t occupied = 0;
  for (std::size_t k = 1; k <= K; ++k) {
    if (counts[k] > 0.0) ++occupied;
    t[k - 1] = structural > 0.0 ? counts[k] / structural : 0.0;
  }
  const double t0 = counts[0] / static_cast<double>(M);
  const double ll = complete_log_likelihood(params, ctx.family, ctx.noise, ctx.net, assignments,
                                            t0, t, ctx.variant);
  return ll - 0.5 * icl_parameter_count(ctx, occupied) * std::log(static_cast<double>(M));
}

}  // namespace wecan
