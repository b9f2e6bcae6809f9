#include <cmath>

#include "objective.hpp"
#include "wecan/error.hpp"

namespace wecan {
namespace detail {

EdgeMass edge_mass(const FitContext& ctx, const RowMatrix& resp) {
  const auto n = static_cast<Eigen::Index>(ctx.net.n_nodes());
  const auto K = static_cast<Eigen::Index>(ctx.K());
  if (resp.rows() != static_cast<Eigen::Index>(ctx.net.n_edges()) || resp.cols() != K + 1)
    throw DomainError("responsibility matrix must be M x (K + 1)");
  EdgeMass mass;
  mass.resp = &resp;
  mass.p_send = RowMatrix::Zero(n, K);
  mass.p_recv = RowMatrix::Zero(n, K);
  for (std::size_t m = 0; m < ctx.net.n_edges(); ++m) {
    const Edge& e = ctx.net.edge(m);
    const auto row = resp.row(static_cast<Eigen::Index>(m)).tail(K);
    mass.p_send.row(static_cast<Eigen::Index>(e.sender)) += row;
    mass.p_recv.row(static_cast<Eigen::Index>(e.receiver)) += row;
  }
  mass.p_dot = mass.p_send.colwise().sum().transpose();
  return mass;
}

Precompute precompute_with_mass(const ModelParams& params, const EdgeMass& mass) {
  Precompute pre = softmax_terms(params);
  pre.p_send = mass.p_send;
  pre.p_recv = mass.p_recv;
  pre.p_dot = mass.p_dot;
  pre.H_scaled = (mass.p_send.array() * (-pre.log_recv_excl.array()).exp()).colwise().sum().transpose();
  return pre;
}

double cg_objective(const FitContext& ctx, const ModelParams& params, const EdgeMass& mass,
                    Gradient* grad) {
  const auto n = static_cast<Eigen::Index>(params.n());
  const auto K = static_cast<Eigen::Index>(params.K());
  const auto p = static_cast<Eigen::Index>(params.p());
  const RowMatrix& resp = *mass.resp;
  const PriorConfig& pr = ctx.prior;
  const bool weighted = ctx.variant.weighted;

  const Precompute pre = precompute_with_mass(params, mass);

  // Sender and receiver factors through the node-level aggregates.
  double value = (mass.p_send.array() * pre.log_send.array()).sum() +
                 (mass.p_recv.array() * pre.log_recv.array()).sum() -
                 (mass.p_send.array() * pre.log_recv_excl.array()).sum();

  if (grad) {
    grad->S1 = Eigen::VectorXd::Zero(n);
    grad->R1 = Eigen::VectorXd::Zero(n);
    grad->S2 = Eigen::VectorXd::Zero(n);
    grad->R2 = Eigen::VectorXd::Zero(n);
    grad->U = RowMatrix::Zero(n, p);
    grad->V = RowMatrix::Zero(n, p);
    grad->Y = RowMatrix::Zero(K, p);
    grad->Lambda = RowMatrix::Zero(K, p);
    grad->beta = Eigen::VectorXd::Zero(K);
    grad->phi = Eigen::VectorXd::Zero(K);

    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double send_prob = std::exp(pre.log_send(i, k));
        const double recv_prob = std::exp(pre.log_recv(i, k));
        const double inv_excl = std::exp(-pre.log_recv_excl(i, k));
        // dQ/dS1_i and dQ/dR1_i per cluster; U_i and V_i get the same
        // coefficients times Y_k.
        const double cu = mass.p_send(i, k) - mass.p_dot(k) * send_prob;
        const double cv = mass.p_recv(i, k) -
                          recv_prob * (pre.H_scaled(k) - mass.p_send(i, k) * inv_excl);
        grad->S1(i) += cu;
        grad->R1(i) += cv;
        grad->U.row(i) += cu * params.Y.row(k);
        grad->V.row(i) += cv * params.Y.row(k);
      }
    }
    // dQ/dY_k = sum_m p_mk (U_s + V_r - s_uk/f_uk
    //           - (s_vk - e^{R1_s + V_s Y_k} V_s) / (f_vk - e^{R1_s + V_s Y_k})) - Y_k
    for (Eigen::Index k = 0; k < K; ++k) {
      Eigen::RowVectorXd g = -mass.p_dot(k) * pre.su_mean.row(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double ps = mass.p_send(i, k);
        g += ps * params.U.row(i) + mass.p_recv(i, k) * params.V.row(i);
        if (ps != 0.0) {
          const double recv_prob = std::exp(pre.log_recv(i, k));
          const double inv_excl = std::exp(-pre.log_recv_excl(i, k));
          g -= ps * inv_excl * (pre.sv_mean.row(k) - recv_prob * params.V.row(i));
        }
      }
      grad->Y.row(k) = g - params.Y.row(k);
    }
  }

  if (weighted) {
    const Eigen::ArrayXd log_phi = params.phi.array().log();
    const Eigen::ArrayXd inv_a = 1.0 / params.phi.array().square();
    for (std::size_t m = 0; m < ctx.net.n_edges(); ++m) {
      const Edge& e = ctx.net.edge(m);
      const auto i = static_cast<Eigen::Index>(e.sender);
      const auto j = static_cast<Eigen::Index>(e.receiver);
      const double y = ctx.y[m];
      const double base = params.S2(i) + params.R2(j);
      for (Eigen::Index k = 0; k < K; ++k) {
        const double pmk = resp(static_cast<Eigen::Index>(m), k + 1);
        if (pmk == 0.0) continue;
        double et = params.beta(k) + base;
        for (Eigen::Index d = 0; d < p; ++d) et += params.U(i, d) * params.Lambda(k, d) * params.V(j, d);
        const double r = y - et;
        value += pmk * (-0.91893853320467274178 - log_phi(k) - 0.5 * r * r * inv_a(k) +
                        ctx.log_jacobian[m]);
        if (grad) {
          const FamilyDerivatives der = ctx.family.derivatives_y(y, et, params.phi(k));
          const double g = pmk * der.d_eta;
          grad->S2(i) += g;
          grad->R2(j) += g;
          grad->beta(k) += g;
          for (Eigen::Index d = 0; d < p; ++d) {
            grad->U(i, d) += g * params.Lambda(k, d) * params.V(j, d);
            grad->V(j, d) += g * params.Lambda(k, d) * params.U(i, d);
            grad->Lambda(k, d) += g * params.U(i, d) * params.V(j, d);
          }
          grad->phi(k) += pmk * der.d_phi;
        }
      }
    }
  }

  // Priors on the CG block.
  {
    const Eigen::Matrix2d P = params.Sigma_SR1.inverse();
    value -= 0.5 * (P(0, 0) * params.S1.squaredNorm() + 2.0 * P(0, 1) * params.S1.dot(params.R1) +
                    P(1, 1) * params.R1.squaredNorm());
    if (grad) {
      grad->S1 -= P(0, 0) * params.S1 + P(0, 1) * params.R1;
      grad->R1 -= P(1, 0) * params.S1 + P(1, 1) * params.R1;
    }
  }
  {
    const Eigen::Matrix2d P = params.Sigma_UV.inverse();
    value -= 0.5 * (P(0, 0) * params.U.squaredNorm() +
                    2.0 * P(0, 1) * (params.U.array() * params.V.array()).sum() +
                    P(1, 1) * params.V.squaredNorm());
    if (grad) {
      grad->U -= P(0, 0) * params.U + P(0, 1) * params.V;
      grad->V -= P(1, 0) * params.U + P(1, 1) * params.V;
    }
  }
  value -= 0.5 * params.Y.squaredNorm();
  if (weighted) {
    const Eigen::Matrix2d P = params.Sigma_SR2.inverse();
    value -= 0.5 * (P(0, 0) * params.S2.squaredNorm() + 2.0 * P(0, 1) * params.S2.dot(params.R2) +
                    P(1, 1) * params.R2.squaredNorm());
    value -= params.Lambda.squaredNorm() / (2.0 * params.lambda);
    const double scale = pr.nu0_t * pr.eta0_t * pr.eta0_t;
    for (Eigen::Index k = 0; k < K; ++k)
      value -= 0.5 * (pr.nu0_t + 1.0) * std::log1p(params.phi(k) * params.phi(k) / scale);
    if (grad) {
      grad->S2 -= P(0, 0) * params.S2 + P(0, 1) * params.R2;
      grad->R2 -= P(1, 0) * params.S2 + P(1, 1) * params.R2;
      grad->Lambda -= params.Lambda / params.lambda;
      for (Eigen::Index k = 0; k < K; ++k)
        grad->phi(k) -= (pr.nu0_t + 1.0) * params.phi(k) / (scale + params.phi(k) * params.phi(k));
    }
  }
  return value;
}

Gradient curvature_diagonal(const FitContext& ctx, const ModelParams& params, const EdgeMass& mass) {
  const auto n = static_cast<Eigen::Index>(params.n());
  const auto K = static_cast<Eigen::Index>(params.K());
  const auto p = static_cast<Eigen::Index>(params.p());
  const Precompute pre = precompute_with_mass(params, mass);
  const Eigen::Matrix2d P1 = params.Sigma_SR1.inverse();
  const Eigen::Matrix2d Puv = params.Sigma_UV.inverse();

  Gradient h;
  h.S1 = Eigen::VectorXd::Constant(n, P1(0, 0));
  h.R1 = Eigen::VectorXd::Constant(n, P1(1, 1));
  h.U = RowMatrix::Constant(n, p, Puv(0, 0));
  h.V = RowMatrix::Constant(n, p, Puv(1, 1));
  h.Y = RowMatrix::Ones(K, p);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double recv_mass = pre.H_scaled(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pu = std::exp(pre.log_send(i, k));
      const double pv = std::exp(pre.log_recv(i, k));
      h.S1(i) += mass.p_dot(k) * pu * (1.0 - pu);
      h.R1(i) += recv_mass * pv * (1.0 - pv);
      for (Eigen::Index d = 0; d < p; ++d) {
        const double y2 = params.Y(k, d) * params.Y(k, d);
        h.U(i, d) += mass.p_dot(k) * pu * y2;
        h.V(i, d) += recv_mass * pv * y2;
        const double du = params.U(i, d) - pre.su_mean(k, d);
        const double dv = params.V(i, d) - pre.sv_mean(k, d);
        h.Y(k, d) += mass.p_dot(k) * pu * du * du + recv_mass * pv * dv * dv;
      }
    }
  }

  if (ctx.variant.weighted) {
    const Eigen::Matrix2d P2 = params.Sigma_SR2.inverse();
    h.S2 = Eigen::VectorXd::Constant(n, P2(0, 0));
    h.R2 = Eigen::VectorXd::Constant(n, P2(1, 1));
    h.Lambda = RowMatrix::Constant(K, p, 1.0 / params.lambda);
    h.beta = Eigen::VectorXd::Zero(K);
    h.phi = Eigen::VectorXd::Zero(K);
    const Eigen::ArrayXd inv_a = 1.0 / params.phi.array().square();
    const RowMatrix& resp = *mass.resp;
    for (std::size_t m = 0; m < ctx.net.n_edges(); ++m) {
      const Edge& e = ctx.net.edge(m);
      const auto i = static_cast<Eigen::Index>(e.sender);
      const auto j = static_cast<Eigen::Index>(e.receiver);
      for (Eigen::Index k = 0; k < K; ++k) {
        const double pmk = resp(static_cast<Eigen::Index>(m), k + 1);
        if (pmk == 0.0) continue;
        const double w = pmk * inv_a(k);
        h.S2(i) += w;
        h.R2(j) += w;
        h.beta(k) += w;
        h.phi(k) += 2.0 * pmk;
        for (Eigen::Index d = 0; d < p; ++d) {
          const double lv = params.Lambda(k, d) * params.V(j, d);
          const double lu = params.Lambda(k, d) * params.U(i, d);
          const double uv = params.U(i, d) * params.V(j, d);
          h.U(i, d) += w * lv * lv;
          h.V(j, d) += w * lu * lu;
          h.Lambda(k, d) += w * uv * uv;
        }
      }
    }
    // Keep unused clusters from producing zero curvature.
    h.beta.array() += 1e-6;
    h.phi.array() += 1.0;
  }
  return h;
}

}  // namespace detail

Gradient m_step_gradients(const FitContext& ctx, const ModelParams& params,
                          const VariationalState& state) {
  const detail::EdgeMass mass = detail::edge_mass(ctx, state.resp);
  Gradient g;
  detail::cg_objective(ctx, params, mass, &g);
  return g;
}

}  // namespace wecan
