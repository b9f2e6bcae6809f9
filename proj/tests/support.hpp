#pragma once

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "wecan/estimation.hpp"
#include "wecan/serialize.hpp"

namespace testing {

inline wecan::Json fixture(const std::string& name) {
  return wecan::read_json_file(std::string(WECAN_TEST_FIXTURES) + "/" + name);
}

inline std::string fixture_path(const std::string& name) {
  return std::string(WECAN_TEST_FIXTURES) + "/" + name;
}

inline wecan::Network network_from_fixture(const wecan::Json& j, std::size_t n) {
  const auto s = j.at("sender").get<std::vector<std::size_t>>();
  const auto r = j.at("receiver").get<std::vector<std::size_t>>();
  const auto w = j.at("weight").get<std::vector<double>>();
  std::vector<wecan::Edge> edges;
  for (std::size_t m = 0; m < w.size(); ++m) edges.push_back({s[m], r[m], w[m]});
  return wecan::Network(n, std::move(edges));
}

inline wecan::ModelParams random_params(std::mt19937_64& rng, std::size_t n, std::size_t K,
                                        std::size_t p, double scale = 0.7) {
  std::normal_distribution<double> z(0.0, scale);
  std::uniform_real_distribution<double> u(0.4, 1.3);
  wecan::ModelParams P = wecan::ModelParams::zeros(n, K, p);
  auto fill = [&](auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = z(rng);
  };
  fill(P.S1);
  fill(P.R1);
  fill(P.S2);
  fill(P.R2);
  fill(P.U);
  fill(P.V);
  fill(P.Y);
  fill(P.Lambda);
  fill(P.beta);
  for (Eigen::Index k = 0; k < P.phi.size(); ++k) P.phi(k) = u(rng);
  P.Sigma_SR1 << 1.1, 0.3, 0.3, 0.8;
  P.Sigma_SR2 << 0.9, -0.2, -0.2, 1.2;
  P.Sigma_UV << 1.3, 0.4, 0.4, 0.7;
  P.lambda = 0.6;
  P.alpha = 0.8;
  return P;
}

inline wecan::Network random_network(std::mt19937_64& rng, std::size_t n, std::size_t M,
                                     bool positive = true) {
  std::uniform_int_distribution<std::size_t> node(0, n - 1), shift(1, n - 1);
  std::gamma_distribution<double> g(2.0, 0.5);
  std::normal_distribution<double> z(0.3, 1.0);
  std::vector<wecan::Edge> edges;
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t s = node(rng);
    edges.push_back({s, (s + shift(rng)) % n, positive ? g(rng) : z(rng)});
  }
  return wecan::Network(n, std::move(edges));
}

/// Random rows on the simplex; the noise column is zero where the weight is
/// outside the noise support or the variant has no noise.
inline wecan::RowMatrix random_resp(std::mt19937_64& rng, const wecan::Network& net,
                                    std::size_t K, bool noise = true) {
  std::gamma_distribution<double> g(0.7, 1.0);
  wecan::RowMatrix R(static_cast<Eigen::Index>(net.n_edges()), static_cast<Eigen::Index>(K + 1));
  for (Eigen::Index m = 0; m < R.rows(); ++m) {
    for (Eigen::Index k = 0; k < R.cols(); ++k) R(m, k) = g(rng) + 1e-3;
    if (!noise || net.edge(static_cast<std::size_t>(m)).weight <= 0.0) R(m, 0) = 0.0;
    R.row(m) /= R.row(m).sum();
  }
  return R;
}

inline wecan::PriorConfig small_prior(std::size_t K, std::size_t p) {
  wecan::PriorConfig pr;
  pr.K_max = K;
  pr.p = p;
  pr.Psi0_SR1 << 1.5, 0.2, 0.2, 1.0;
  pr.Psi0_SR2 << 0.8, 0.0, 0.0, 1.4;
  pr.Psi0_UV << 1.0, -0.3, -0.3, 2.0;
  pr.nu0_SR1 = 4.0;
  pr.nu0_SR2 = 5.0;
  pr.nu0_UV = 3.5;
  pr.a0 = 2.0;
  pr.b0 = 1.5;
  pr.a_alpha = 2.0;
  pr.b_alpha = 3.0;
  pr.c0 = 1.5;
  pr.d0 = 2.5;
  pr.nu0_t = 3.0;
  pr.eta0_t = 0.8;
  return pr;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing
