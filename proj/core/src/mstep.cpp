#include <algorithm>
#include <cmath>
#include <limits>

#include "objective.hpp"
#include "special.hpp"
#include "wecan/error.hpp"
#include "wecan/estimation.hpp"

namespace wecan {

namespace {

// Flat view of the CG block. phi is carried as log(phi).
class ParamPacker {
 public:
  ParamPacker(const ModelParams& shape, bool weighted)
      : n_(static_cast<Eigen::Index>(shape.n())),
        K_(static_cast<Eigen::Index>(shape.K())),
        p_(static_cast<Eigen::Index>(shape.p())),
        weighted_(weighted) {}

  Eigen::Index size() const {
    Eigen::Index s = 2 * n_ + 2 * n_ * p_ + K_ * p_;
    if (weighted_) s += 2 * n_ + K_ * p_ + 2 * K_;
    return s;
  }

  Eigen::VectorXd pack(const ModelParams& m) const {
    Eigen::VectorXd x(size());
    Eigen::Index o = 0;
    put(x, o, m.S1);
    put(x, o, m.R1);
    put(x, o, m.U.reshaped<Eigen::RowMajor>());
    put(x, o, m.V.reshaped<Eigen::RowMajor>());
    put(x, o, m.Y.reshaped<Eigen::RowMajor>());
    if (weighted_) {
      put(x, o, m.S2);
      put(x, o, m.R2);
      put(x, o, m.Lambda.reshaped<Eigen::RowMajor>());
      put(x, o, m.beta);
      put(x, o, m.phi.array().log().matrix());
    }
    return x;
  }

  void unpack(const Eigen::VectorXd& x, ModelParams& m) const {
    Eigen::Index o = 0;
    m.S1 = x.segment(o, n_); o += n_;
    m.R1 = x.segment(o, n_); o += n_;
    m.U.reshaped<Eigen::RowMajor>() = x.segment(o, n_ * p_); o += n_ * p_;
    m.V.reshaped<Eigen::RowMajor>() = x.segment(o, n_ * p_); o += n_ * p_;
    m.Y.reshaped<Eigen::RowMajor>() = x.segment(o, K_ * p_); o += K_ * p_;
    if (weighted_) {
      m.S2 = x.segment(o, n_); o += n_;
      m.R2 = x.segment(o, n_); o += n_;
      m.Lambda.reshaped<Eigen::RowMajor>() = x.segment(o, K_ * p_); o += K_ * p_;
      m.beta = x.segment(o, K_); o += K_;
      m.phi = x.segment(o, K_).array().exp(); o += K_;
    }
  }

  // Packs a gradient-shaped bundle as is (no chain rule on phi).
  Eigen::VectorXd pack_raw(const Gradient& g) const {
    Eigen::VectorXd x(size());
    Eigen::Index o = 0;
    put(x, o, g.S1);
    put(x, o, g.R1);
    put(x, o, g.U.reshaped<Eigen::RowMajor>());
    put(x, o, g.V.reshaped<Eigen::RowMajor>());
    put(x, o, g.Y.reshaped<Eigen::RowMajor>());
    if (weighted_) {
      put(x, o, g.S2);
      put(x, o, g.R2);
      put(x, o, g.Lambda.reshaped<Eigen::RowMajor>());
      put(x, o, g.beta);
      put(x, o, g.phi);
    }
    return x;
  }

  // Gradient in packed coordinates; d/dlog(phi) = phi d/dphi.
  Eigen::VectorXd pack_gradient(const Gradient& g, const ModelParams& m) const {
    Eigen::VectorXd x(size());
    Eigen::Index o = 0;
    put(x, o, g.S1);
    put(x, o, g.R1);
    put(x, o, g.U.reshaped<Eigen::RowMajor>());
    put(x, o, g.V.reshaped<Eigen::RowMajor>());
    put(x, o, g.Y.reshaped<Eigen::RowMajor>());
    if (weighted_) {
      put(x, o, g.S2);
      put(x, o, g.R2);
      put(x, o, g.Lambda.reshaped<Eigen::RowMajor>());
      put(x, o, g.beta);
      put(x, o, (g.phi.array() * m.phi.array()).matrix());
    }
    return x;
  }

 private:
  template <class V>
  static void put(Eigen::VectorXd& x, Eigen::Index& o, const V& v) {
    x.segment(o, v.size()) = v;
    o += v.size();
  }

  Eigen::Index n_, K_, p_;
  bool weighted_;
};

}  // namespace

Eigen::Matrix2d pair_scatter(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::Matrix2d s;
  s(0, 0) = a.squaredNorm();
  s(0, 1) = s(1, 0) = a.dot(b);
  s(1, 1) = b.squaredNorm();
  return s;
}

Eigen::Matrix2d latent_scatter(const RowMatrix& U, const RowMatrix& V) {
  Eigen::Matrix2d s;
  s(0, 0) = U.squaredNorm();
  s(0, 1) = s(1, 0) = (U.array() * V.array()).sum();
  s(1, 1) = V.squaredNorm();
  return s;
}

Eigen::Matrix2d covariance_mode(const Eigen::Matrix2d& psi0, double nu0,
                                const Eigen::Matrix2d& scatter, double count) {
  return (psi0 + scatter) / (nu0 + count + 3.0);
}

double lambda_mode(const PriorConfig& prior, const RowMatrix& Lambda) {
  const double Kp = static_cast<double>(Lambda.size());
  return (prior.b0 + 0.5 * Lambda.squaredNorm()) / (prior.a0 + 0.5 * Kp + 1.0);
}

double concentration_update(const Eigen::VectorXd& e_log_t, const PriorConfig& prior) {
  const double K = static_cast<double>(e_log_t.size());
  const double S = e_log_t.sum();
  const double a = prior.a_alpha;
  const double b = prior.b_alpha;
  // Score in alpha; strictly decreasing, +inf at 0+, <= -b at infinity.
  auto score = [&](double al) {
    return K * detail::digamma(K * al) - K * detail::digamma(al) + S + a / al - b;
  };
  auto curvature = [&](double al) {
    return K * K * detail::trigamma(K * al) - K * detail::trigamma(al) - a / (al * al);
  };
  // Bracket the root in log space, then safeguarded Newton.
  double lo = 1e-8, hi = 1.0;
  while (score(lo) < 0.0 && lo > 1e-300) lo *= 1e-4;
  while (score(hi) > 0.0 && hi < 1e12) hi *= 4.0;
  double x = std::sqrt(lo * hi);
  for (int it = 0; it < 200; ++it) {
    const double s = score(x);
    if (s > 0.0) lo = x; else hi = x;
    // Newton in u = log alpha: du = -s / (alpha * s').
    const double c = curvature(x);
    double next = x * std::exp(-s / (x * c));
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = std::sqrt(lo * hi);
    if (std::abs(next - x) <= 1e-14 * x) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

Eigen::VectorXd dirichlet_map_weights(const RowMatrix& resp, double alpha0) {
  const Eigen::Index K = resp.cols() - 1;
  Eigen::VectorXd w(K);
  for (Eigen::Index k = 0; k < K; ++k)
    w(k) = std::max(alpha0 + resp.col(k + 1).sum() - 1.0, 0.0);
  const double total = w.sum();
  if (!(total > 0.0)) return Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  return w / total;
}

MStepReport m_step(const FitContext& ctx, const ModelParams& params,
                   const VariationalState& state, const MStepOptions& options) {
  if (options.cg_iters < 1) throw DomainError("cg_iters must be >= 1");
  const LineSearchOptions& ls = options.line_search;
  MStepReport report;
  report.params = params;
  ModelParams& cur = report.params;

  const detail::EdgeMass mass = detail::edge_mass(ctx, state.resp);
  const ParamPacker packer(params, ctx.variant.weighted);

  Gradient grad;
  double f = detail::cg_objective(ctx, cur, mass, &grad);
  if (!std::isfinite(f)) throw NumericalError("M-step objective is not finite at the start");
  Eigen::VectorXd x = packer.pack(cur);
  Eigen::VectorXd g = packer.pack_gradient(grad, cur);
  // Diagonal preconditioner, fixed for the whole M-step.
  const Eigen::VectorXd inv_h =
      packer.pack_raw(detail::curvature_diagonal(ctx, cur, mass)).cwiseMax(1e-8).cwiseInverse();
  Eigen::VectorXd z = inv_h.cwiseProduct(g);
  Eigen::VectorXd d = z;
  double step_prev = 0.0;
  double slope_prev = 0.0;
  ModelParams trial = cur;

  for (std::size_t it = 0; it < options.cg_iters; ++it) {
    double slope = g.dot(d);
    if (!(slope > 0.0)) {
      d = z;
      slope = g.dot(z);
    }
    if (!(slope > 0.0)) break;  // stationary

    // A unit step is the diagonal-Newton step. No coordinate moves by more
    // than 1 on the first trial; later trials rescale the previous accepted
    // step by the change in directional slope.
    const double cap = 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300);
    double step = it == 0 || step_prev == 0.0 ? 1.0 : step_prev * slope_prev / slope;
    step = std::min({step, 2.0, cap});

    bool accepted = false;
    double f_new = f;
    for (std::size_t bt = 0; bt <= ls.max_backtracks; ++bt) {
      packer.unpack(x + step * d, trial);
      f_new = detail::cg_objective(ctx, trial, mass, nullptr);
      if (std::isfinite(f_new) && f_new >= f + ls.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= ls.shrink;
    }
    if (!accepted) {
      report.line_search_failed = true;
      break;
    }
    x += step * d;
    cur = trial;
    f = detail::cg_objective(ctx, cur, mass, &grad);
    const Eigen::VectorXd g_prev = g;
    const Eigen::VectorXd z_prev = z;
    g = packer.pack_gradient(grad, cur);
    z = inv_h.cwiseProduct(g);
    step_prev = step;
    slope_prev = slope;
    ++report.cg_iterations;

    // Preconditioned Polak-Ribiere+.
    const double beta = std::max(0.0, z.dot(g - g_prev) / z_prev.dot(g_prev));
    d = z + beta * d;
  }

  // Closed-form block.
  const PriorConfig& pr = ctx.prior;
  const double n = static_cast<double>(cur.n());
  const double np = static_cast<double>(cur.U.size());
  cur.Sigma_SR1 = covariance_mode(pr.Psi0_SR1, pr.nu0_SR1, pair_scatter(cur.S1, cur.R1), n);
  cur.Sigma_UV = covariance_mode(pr.Psi0_UV, pr.nu0_UV, latent_scatter(cur.U, cur.V), np);
  if (ctx.variant.weighted) {
    cur.Sigma_SR2 = covariance_mode(pr.Psi0_SR2, pr.nu0_SR2, pair_scatter(cur.S2, cur.R2), n);
    cur.lambda = lambda_mode(pr, cur.Lambda);
  }
  if (ctx.mixture == MixtureMode::kSparseFinite) {
    cur.alpha = concentration_update(state.e_log_t, pr);
  } else {
    cur.mix_map = dirichlet_map_weights(state.resp, pr.alpha0_map);
  }
  return report;
}

}  // namespace wecan
