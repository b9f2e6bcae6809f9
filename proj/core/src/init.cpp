#include "wecan/init.hpp"

#include <cmath>
#include <algorithm>
#include <random>

#include "vbgem.hpp"

namespace wecan {

namespace {

// Distinct streams for the pre-fit and the remaining blocks so changing one
// does not shift the other.
constexpr std::uint64_t kStreamLatent = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kStreamRemaining = 0xbf58476d1ce4e5b9ULL;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

double signed_log1p(double s) { return s >= 0.0 ? std::log1p(s) : -std::log1p(-s); }

Eigen::VectorXd centered(Eigen::VectorXd v) {
  v.array() -= v.mean();
  return v;
}

double mean_y(const FitContext& ctx) {
  double s = 0.0;
  for (double v : ctx.y) s += v;
  return ctx.y.empty() ? 0.0 : s / static_cast<double>(ctx.y.size());
}

}  // namespace

RemainingInit init_remaining(const FitContext& ctx, std::uint64_t seed) {
  const auto K = static_cast<Eigen::Index>(ctx.K());
  const auto p = static_cast<Eigen::Index>(ctx.p());
  const PriorConfig& pr = ctx.prior;
  auto rng = make_rng(seed, kStreamRemaining);
  std::normal_distribution<double> jitter(0.0, 0.1);

  RemainingInit r;
  r.Lambda = RowMatrix::Zero(K, p);
  r.beta.resize(K);
  // The count-only variant has no y; its beta is never read.
  const double centre = ctx.y.empty() ? 0.0 : mean_y(ctx);
  for (Eigen::Index k = 0; k < K; ++k) r.beta(k) = centre + jitter(rng);
  r.Sigma_SR1 = pr.Psi0_SR1 / (pr.nu0_SR1 + 3.0);
  r.Sigma_SR2 = pr.Psi0_SR2 / (pr.nu0_SR2 + 3.0);
  r.Sigma_UV = pr.Psi0_UV / (pr.nu0_UV + 3.0);
  r.lambda = pr.b0 / (pr.a0 + 1.0);
  r.alpha = pr.a_alpha / pr.b_alpha;
  return r;
}

WeightInit init_weight_params(const Network& net, const WeightFamily& family) {
  const auto n = static_cast<Eigen::Index>(net.n_nodes());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd in = Eigen::VectorXd::Zero(n);
  double sum = 0.0, sum_sq = 0.0;
  for (const Edge& e : net.edges()) {
    const double y = family.transform(e.weight);
    out(static_cast<Eigen::Index>(e.sender)) += y;
    in(static_cast<Eigen::Index>(e.receiver)) += y;
    sum += y;
    sum_sq += y * y;
  }
  WeightInit w;
  w.S2 = centered(out.unaryExpr(&signed_log1p));
  w.R2 = centered(in.unaryExpr(&signed_log1p));

  const double M = static_cast<double>(net.n_edges());
  double sd = 0.0;
  if (M > 1.0) {
    const double mean = sum / M;
    sd = std::sqrt(std::max(0.0, (sum_sq - M * mean * mean) / (M - 1.0)));
  }
  w.phi = std::isfinite(sd) ? std::max(sd, kMinInitialDispersion) : kMinInitialDispersion;
  return w;
}

ModelParams random_start(const FitContext& ctx, std::uint64_t seed, double scale,
                         double radius) {
  const std::size_t n = ctx.net.n_nodes();
  const std::size_t K = ctx.K();
  const std::size_t p = ctx.p();
  ModelParams params = ModelParams::zeros(n, K, p);

  Eigen::VectorXd out_deg = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd in_deg = out_deg;
  for (const Edge& e : ctx.net.edges()) {
    out_deg(static_cast<Eigen::Index>(e.sender)) += 1.0;
    in_deg(static_cast<Eigen::Index>(e.receiver)) += 1.0;
  }
  params.S1 = centered(out_deg.array().log1p().matrix());
  params.R1 = centered(in_deg.array().log1p().matrix());

  // Each cluster gets a random unit direction Y_k. Every node sends towards
  // one cluster and receives from another: U_i, V_i sit at radius times that
  // direction plus Normal(0, scale^2) jitter.
  auto rng = make_rng(seed, kStreamLatent);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, scale);
  for (Eigen::Index k = 0; k < params.Y.rows(); ++k) {
    for (Eigen::Index d = 0; d < params.Y.cols(); ++d) params.Y(k, d) = unit(rng);
    params.Y.row(k).normalize();
  }
  std::uniform_int_distribution<Eigen::Index> pick(0, params.Y.rows() - 1);
  for (Eigen::Index i = 0; i < params.U.rows(); ++i) {
    const Eigen::Index a = pick(rng);
    const Eigen::Index b = pick(rng);
    for (Eigen::Index d = 0; d < params.U.cols(); ++d) {
      params.U(i, d) = radius * params.Y(a, d) + jitter(rng);
      params.V(i, d) = radius * params.Y(b, d) + jitter(rng);
    }
  }

  const RemainingInit rest = init_remaining(ctx, seed);
  params.Lambda = rest.Lambda;
  params.beta = rest.beta;
  params.Sigma_SR1 = rest.Sigma_SR1;
  params.Sigma_SR2 = rest.Sigma_SR2;
  params.Sigma_UV = rest.Sigma_UV;
  params.lambda = rest.lambda;
  params.alpha = rest.alpha;
  if (ctx.mixture == MixtureMode::kDirichletMap)
    params.mix_map = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(K), 1.0 / K);
  return params;
}

InitResult init_unweighted(const FitContext& ctx, const FitOptions& options, std::uint64_t seed) {
  FitContext sub = ctx.with_variant({.weighted = false, .noise = false});
  ModelParams params = random_start(sub, seed, options.init_scale, options.init_radius);
  const auto M = static_cast<Eigen::Index>(sub.net.n_edges());
  const auto K = static_cast<Eigen::Index>(sub.K());
  RowMatrix resp = RowMatrix::Zero(M, K + 1);
  resp.rightCols(K).setConstant(1.0 / static_cast<double>(K));
  VariationalState state = initial_state(sub, params, std::move(resp));
  auto run = detail::run_vbgem(sub, std::move(params), std::move(state), {}, options,
                               /*mstep_first=*/false);
  InitResult out;
  out.params = std::move(run.params);
  out.resp = std::move(run.state.resp);
  out.resp.col(0).setZero();
  out.assignments = std::move(run.assignments);
  out.elbo_trace = std::move(run.elbo_trace);
  out.n_outer_iterations = run.n_outer_iterations;
  out.converged = run.converged;
  return out;
}

InitResult initialize(const FitContext& ctx, const FitOptions& options, std::uint64_t seed) {
  InitResult init = init_unweighted(ctx, options, seed);
  const RemainingInit rest = init_remaining(ctx, seed);
  ModelParams& p = init.params;
  // The count-only likelihood sees U and Y only through U_i . Y_k, so the
  // pre-fit may leave Y large and U small. Bring Y to unit root-mean-square
  // over the live clusters before the weights make U's scale matter.
  double ss = 0.0;
  int live = 0;
  for (Eigen::Index k = 0; k < p.Y.rows(); ++k) {
    if (init.resp.col(k + 1).sum() >= options.mass_threshold) {
      ss += p.Y.row(k).squaredNorm();
      ++live;
    }
  }
  if (live > 0 && ss > 0.0) {
    const double c = std::sqrt(ss / live);
    p.Y /= c;
    p.U *= c;
    p.V *= c;
    p.Sigma_UV = covariance_mode(ctx.prior.Psi0_UV, ctx.prior.nu0_UV, latent_scatter(p.U, p.V),
                                 static_cast<double>(p.U.size()));
  }
  p.Lambda = rest.Lambda;
  p.beta = rest.beta;
  p.Sigma_SR2 = rest.Sigma_SR2;
  p.lambda = rest.lambda;
  if (ctx.variant.weighted) {
    const WeightInit w = init_weight_params(ctx.net, ctx.family);
    p.S2 = w.S2;
    p.R2 = w.R2;
    p.phi.setConstant(w.phi);
  }
  return init;
}

}  // namespace wecan
