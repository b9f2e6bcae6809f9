#include "wecan/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "wecan/error.hpp"

namespace wecan {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_spd(const Eigen::Matrix2d& m) {
  return std::abs(m(0, 1) - m(1, 0)) <= 1e-12 * (1.0 + std::abs(m(0, 1))) && m(0, 0) > 0.0 &&
         m.determinant() > 0.0;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

// log(sum_i exp(x_i)) for each column, plus the normalized softmax weights.
void log_softmax_columns(const RowMatrix& logits, Eigen::VectorXd& log_norm, RowMatrix& log_prob) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index K = logits.cols();
  log_norm.resize(K);
  log_prob.resize(n, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double mx = logits.col(k).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += std::exp(logits(i, k) - mx);
    log_norm(k) = mx + std::log(sum);
    for (Eigen::Index i = 0; i < n; ++i) log_prob(i, k) = logits(i, k) - log_norm(k);
  }
}

}  // namespace

void PriorConfig::validate() const {
  require(p >= 1, "latent dimension p must be >= 1");
  require(K_max >= 1, "K_max must be >= 1");
  require(is_spd(Psi0_SR1) && is_spd(Psi0_SR2) && is_spd(Psi0_UV),
          "prior scale matrices must be symmetric positive definite");
  require(nu0_SR1 > 1.0 && nu0_SR2 > 1.0 && nu0_UV > 1.0,
          "inverse-Wishart degrees of freedom must exceed dimension - 1");
  require(a0 > 0 && b0 > 0 && a_alpha > 0 && b_alpha > 0 && c0 > 0 && d0 > 0 && nu0_t > 0 &&
              eta0_t > 0 && alpha0_map > 0,
          "prior hyperparameters must be positive");
}

PriorConfig data_scaled_prior(PriorConfig prior, std::size_t n_nodes, double variance) {
  require(variance > 0.0 && std::isfinite(variance), "prior variance must be positive");
  const double n = static_cast<double>(n_nodes);
  const double np = n * static_cast<double>(prior.p);
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  prior.Psi0_SR1 = variance * (prior.nu0_SR1 + n + 3.0) * I;
  prior.Psi0_SR2 = variance * (prior.nu0_SR2 + n + 3.0) * I;
  prior.Psi0_UV = variance * (prior.nu0_UV + np + 3.0) * I;
  return prior;
}

ModelParams ModelParams::zeros(std::size_t n, std::size_t K, std::size_t p) {
  ModelParams m;
  const auto N = static_cast<Eigen::Index>(n);
  const auto KK = static_cast<Eigen::Index>(K);
  const auto P = static_cast<Eigen::Index>(p);
  m.S1 = Eigen::VectorXd::Zero(N);
  m.R1 = Eigen::VectorXd::Zero(N);
  m.S2 = Eigen::VectorXd::Zero(N);
  m.R2 = Eigen::VectorXd::Zero(N);
  m.U = RowMatrix::Zero(N, P);
  m.V = RowMatrix::Zero(N, P);
  m.Y = RowMatrix::Zero(KK, P);
  m.Lambda = RowMatrix::Zero(KK, P);
  m.beta = Eigen::VectorXd::Zero(KK);
  m.phi = Eigen::VectorXd::Ones(KK);
  return m;
}

void ModelParams::validate() const {
  const auto N = S1.size();
  const auto KK = Y.rows();
  const auto P = Y.cols();
  require(N >= 2, "need at least two nodes");
  require(KK >= 1 && P >= 1, "need K >= 1 and p >= 1");
  require(R1.size() == N && S2.size() == N && R2.size() == N, "propensity vectors differ in length");
  require(U.rows() == N && V.rows() == N && U.cols() == P && V.cols() == P,
          "U and V must be n x p");
  require(Lambda.rows() == KK && Lambda.cols() == P, "Lambda must be K x p");
  require(beta.size() == KK && phi.size() == KK, "beta and phi must have length K");
  require(mix_map.size() == 0 || mix_map.size() == KK, "mix_map must be empty or length K");
  require((phi.array() > 0.0).all(), "dispersions must be positive");
  require(is_spd(Sigma_SR1) && is_spd(Sigma_SR2) && is_spd(Sigma_UV),
          "covariance matrices must be symmetric positive definite");
  require(lambda > 0.0 && alpha > 0.0, "lambda and alpha must be positive");
  require(S1.allFinite() && R1.allFinite() && S2.allFinite() && R2.allFinite() && U.allFinite() &&
              V.allFinite() && Y.allFinite() && Lambda.allFinite() && beta.allFinite() &&
              phi.allFinite(),
          "parameters must be finite");
}

double Precompute::f_u(std::size_t row) const { return std::exp(log_fu(static_cast<Eigen::Index>(row))); }
double Precompute::f_v(std::size_t row) const { return std::exp(log_fv(static_cast<Eigen::Index>(row))); }
Eigen::VectorXd Precompute::s_u(std::size_t row) const {
  return f_u(row) * su_mean.row(static_cast<Eigen::Index>(row)).transpose();
}
Eigen::VectorXd Precompute::s_v(std::size_t row) const {
  return f_v(row) * sv_mean.row(static_cast<Eigen::Index>(row)).transpose();
}
double Precompute::H(std::size_t row) const {
  return H_scaled(static_cast<Eigen::Index>(row)) / f_v(row);
}

Precompute softmax_terms(const ModelParams& params) {
  Precompute pre;
  const Eigen::Index n = params.S1.size();
  const Eigen::Index K = params.Y.rows();

  RowMatrix send_logits = params.U * params.Y.transpose();
  send_logits.colwise() += params.S1;
  RowMatrix recv_logits = params.V * params.Y.transpose();
  recv_logits.colwise() += params.R1;
  log_softmax_columns(send_logits, pre.log_fu, pre.log_send);
  log_softmax_columns(recv_logits, pre.log_fv, pre.log_recv);

  pre.log_recv_excl.resize(n, K);
  const double log_guard = std::log(kReceiverGuard);
  for (Eigen::Index k = 0; k < K; ++k) {
    Eigen::Index top = 0;
    pre.log_recv.col(k).maxCoeff(&top);
    for (Eigen::Index i = 0; i < n; ++i) {
      double rest = 0.0;
      if (i == top) {
        // 1 - pi_top loses all precision when pi_top is near one; sum the rest directly.
        for (Eigen::Index l = 0; l < n; ++l)
          if (l != top) rest += std::exp(pre.log_recv(l, k));
      } else {
        rest = -std::expm1(pre.log_recv(i, k));
      }
      pre.log_recv_excl(i, k) = rest > kReceiverGuard ? std::log(rest) : log_guard;
    }
  }

  const RowMatrix send_prob = pre.log_send.array().exp();
  const RowMatrix recv_prob = pre.log_recv.array().exp();
  pre.su_mean = send_prob.transpose() * params.U;
  pre.sv_mean = recv_prob.transpose() * params.V;
  return pre;
}

Precompute refresh_precompute(const ModelParams& params, const Network& net,
                              const RowMatrix& resp) {
  Precompute pre = softmax_terms(params);
  const Eigen::Index n = params.S1.size();
  const Eigen::Index K = params.Y.rows();
  if (resp.rows() != static_cast<Eigen::Index>(net.n_edges()) || resp.cols() != K + 1)
    throw DomainError("responsibility matrix must be M x (K + 1)");

  pre.p_send = RowMatrix::Zero(n, K);
  pre.p_recv = RowMatrix::Zero(n, K);
  pre.p_dot = Eigen::VectorXd::Zero(K);
  pre.H_scaled = Eigen::VectorXd::Zero(K);
  for (std::size_t m = 0; m < net.n_edges(); ++m) {
    const Edge& e = net.edge(m);
    const auto i = static_cast<Eigen::Index>(e.sender);
    const auto j = static_cast<Eigen::Index>(e.receiver);
    const auto row = resp.row(static_cast<Eigen::Index>(m)).tail(K);
    pre.p_send.row(i) += row;
    pre.p_recv.row(j) += row;
  }
  pre.p_dot = pre.p_send.colwise().sum().transpose();
  // H_k f_vk = sum_m p_mk / (1 - pi_{e_m1 k}) = sum_i p_(i1)k / (1 - pi_ik).
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < K; ++k)
      pre.H_scaled(k) += pre.p_send(i, k) * std::exp(-pre.log_recv_excl(i, k));
  return pre;
}

double eta(const ModelParams& params, NodeId i, NodeId j, ClusterId k) {
  const auto r = static_cast<Eigen::Index>(k - 1);
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  double bilinear = 0.0;
  for (Eigen::Index d = 0; d < params.U.cols(); ++d)
    bilinear += params.U(ii, d) * params.Lambda(r, d) * params.V(jj, d);
  return params.beta(r) + params.S2(ii) + params.R2(jj) + bilinear;
}

double sender_log_prob(const ModelParams& params, const Precompute& pre, NodeId i, ClusterId k) {
  if (k == kNoiseCluster) return -std::log(static_cast<double>(params.n()));
  return pre.log_send(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1));
}

double receiver_log_prob(const ModelParams& params, const Precompute& pre, NodeId j, NodeId i,
                         ClusterId k) {
  if (i == j) return kNegInf;
  if (k == kNoiseCluster) return -std::log(static_cast<double>(params.n()) - 1.0);
  const auto c = static_cast<Eigen::Index>(k - 1);
  return pre.log_recv(static_cast<Eigen::Index>(j), c) -
         pre.log_recv_excl(static_cast<Eigen::Index>(i), c);
}

double edge_cluster_log_density(const ModelParams& params, const Precompute& pre,
                                const WeightFamily& family, const NoiseLaw& noise,
                                const Edge& edge, ClusterId k, const ModelVariant& variant) {
  const double pair = sender_log_prob(params, pre, edge.sender, k) +
                      receiver_log_prob(params, pre, edge.receiver, edge.sender, k);
  if (!variant.weighted) return pair;
  if (k == kNoiseCluster) return pair + noise.log_density(edge.weight);
  const double e = eta(params, edge.sender, edge.receiver, k);
  return pair + family.log_density(edge.weight, e, params.phi(static_cast<Eigen::Index>(k - 1)));
}

RowMatrix edge_log_densities(const ModelParams& params, const Precompute& pre,
                             const WeightFamily& family, const NoiseLaw& noise, const Network& net,
                             const ModelVariant& variant) {
  const auto M = static_cast<Eigen::Index>(net.n_edges());
  const Eigen::Index K = params.Y.rows();
  const Eigen::Index p = params.Y.cols();
  const double n = static_cast<double>(params.n());
  const double noise_pair = -std::log(n) - std::log(n - 1.0);
  RowMatrix out(M, K + 1);

  Eigen::VectorXd log_phi = params.phi.array().log();
  for (Eigen::Index m = 0; m < M; ++m) {
    const Edge& e = net.edge(static_cast<std::size_t>(m));
    const auto i = static_cast<Eigen::Index>(e.sender);
    const auto j = static_cast<Eigen::Index>(e.receiver);
    if (variant.noise) {
      out(m, 0) = variant.weighted ? noise_pair + noise.log_density_or_ninf(e.weight) : noise_pair;
    } else {
      out(m, 0) = kNegInf;
    }
    double y = 0.0;
    double log_jac = 0.0;
    if (variant.weighted) {
      y = family.transform(e.weight);
      if (family.kind() == FamilyKind::kLogNormal) log_jac = -y;
    }
    const double base = variant.weighted ? params.S2(i) + params.R2(j) : 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      double v = pre.log_send(i, k) + pre.log_recv(j, k) - pre.log_recv_excl(i, k);
      if (variant.weighted) {
        double et = params.beta(k) + base;
        for (Eigen::Index d = 0; d < p; ++d) et += params.U(i, d) * params.Lambda(k, d) * params.V(j, d);
        const double r = (y - et) / params.phi(k);
        v += -0.91893853320467274178 - log_phi(k) - 0.5 * r * r + log_jac;
      }
      out(m, k + 1) = v;
    }
  }
  return out;
}

double complete_log_likelihood(const ModelParams& params, const WeightFamily& family,
                               const NoiseLaw& noise, const Network& net,
                               std::span<const ClusterId> assignments, double t0,
                               std::span<const double> t, const ModelVariant& variant) {
  if (assignments.size() != net.n_edges())
    throw DomainError("assignment vector length does not match edge count");
  if (t.size() != params.K()) throw DomainError("mixture weight vector must have length K");
  const Precompute pre = softmax_terms(params);
  const double log_t0 = std::log(t0);
  const double log_1mt0 = variant.noise ? std::log1p(-t0) : 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < net.n_edges(); ++m) {
    const ClusterId k = assignments[m];
    if (k > params.K()) throw DomainError("assignment out of range at edge " + std::to_string(m));
    if (k == kNoiseCluster) {
      if (!variant.noise) throw DomainError("noise assignment in a noise-free model");
      total += log_t0;
    } else {
      total += std::log(t[k - 1]) + log_1mt0;
    }
    total += edge_cluster_log_density(params, pre, family, noise, net.edge(m), k, variant);
  }
  return total;
}

}  // namespace wecan
