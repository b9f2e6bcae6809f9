#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracle/naive_model.hpp"
#include "support.hpp"
#include "wecan/error.hpp"
#include "wecan/model.hpp"

using namespace wecan;

TEST_SUITE("model") {

TEST_CASE("eta") {
  ModelParams P = ModelParams::zeros(4, 2, 2);
  P.beta << 0.3, -1.0;
  CHECK(eta(P, 0, 1, 1) == 0.3);
  CHECK(eta(P, 2, 3, 2) == -1.0);

  P.beta(0) = 1.0;
  P.S2(0) = 0.5;
  P.R2(1) = -0.25;
  P.U.row(0) << 1.0, 2.0;
  P.Lambda.row(0) << 0.1, 0.05;
  P.V.row(1) << 1.0, 1.0;
  CHECK(eta(P, 0, 1, 1) == doctest::Approx(1.45).epsilon(1e-15));

  std::mt19937_64 rng(1);
  ModelParams R = testing::random_params(rng, 6, 3, 4);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      for (std::size_t k = 1; k <= 3; ++k) {
        double v = R.beta(k - 1) + R.S2(i) + R.R2(j);
        for (int d = 0; d < 4; ++d) v += R.U(i, d) * R.Lambda(k - 1, d) * R.V(j, d);
        CHECK(eta(R, i, j, k) == doctest::Approx(v).epsilon(1e-14));
      }
}

TEST_CASE("noise sender and receiver") {
  ModelParams P = ModelParams::zeros(167, 1, 2);
  Precompute pre = softmax_terms(P);
  CHECK(sender_log_prob(P, pre, 5, 0) == doctest::Approx(std::log(1.0 / 167.0)).epsilon(1e-15));

  ModelParams Q = ModelParams::zeros(10, 1, 2);
  Precompute pq = softmax_terms(Q);
  CHECK(receiver_log_prob(Q, pq, 3, 0, 0) == doctest::Approx(std::log(1.0 / 9.0)).epsilon(1e-15));
  CHECK(std::isinf(receiver_log_prob(Q, pq, 4, 4, 0)));
  CHECK(std::isinf(receiver_log_prob(Q, pq, 4, 4, 1)));
  CHECK(receiver_log_prob(Q, pq, 4, 4, 1) < 0.0);
}

TEST_CASE("symmetric softmax") {
  ModelParams P = ModelParams::zeros(8, 2, 3);
  Precompute pre = softmax_terms(P);
  for (std::size_t i = 0; i < 8; ++i)
    CHECK(sender_log_prob(P, pre, i, 2) == doctest::Approx(-std::log(8.0)).epsilon(1e-15));

  ModelParams Q = ModelParams::zeros(3, 1, 2);
  Q.S1 << 0.0, std::log(2.0), 0.0;
  Precompute pq = softmax_terms(Q);
  CHECK(std::exp(sender_log_prob(Q, pq, 0, 1)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(std::exp(sender_log_prob(Q, pq, 1, 1)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::exp(sender_log_prob(Q, pq, 2, 1)) == doctest::Approx(0.25).epsilon(1e-15));
  // R1 = 0, V = 0: from node 0 the other two nodes are equally likely.
  CHECK(std::exp(receiver_log_prob(Q, pq, 1, 0, 1)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::exp(receiver_log_prob(Q, pq, 2, 0, 1)) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("probabilities match the loop oracle") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    ModelParams P = testing::random_params(rng, 9, 3, 2, 1.2);
    Precompute pre = softmax_terms(P);
    for (std::size_t k = 0; k <= 3; ++k)
      for (std::size_t i = 0; i < 9; ++i) {
        CHECK(std::exp(sender_log_prob(P, pre, i, k)) ==
              doctest::Approx(oracle::sender_prob(P, i, k)).epsilon(1e-12));
        for (std::size_t j = 0; j < 9; ++j) {
          if (j == i) continue;
          CHECK(std::exp(receiver_log_prob(P, pre, j, i, k)) ==
                doctest::Approx(oracle::receiver_prob(P, j, i, k)).epsilon(1e-12));
        }
      }
  }
}

TEST_CASE("softmax is stable at extreme logits") {
  ModelParams P = ModelParams::zeros(4, 1, 1);
  P.S1 << 800.0, 799.0, -800.0, 0.0;
  P.R1 << 900.0, 0.0, 0.0, 0.0;
  Precompute pre = softmax_terms(P);
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) s += std::exp(sender_log_prob(P, pre, i, 1));
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  // Node 0 carries all receiving mass; the guard keeps the excluded sum finite.
  const double lr = receiver_log_prob(P, pre, 1, 0, 1);
  CHECK(std::isfinite(lr));
  CHECK(std::isfinite(pre.log_recv_excl(0, 0)));
  CHECK(pre.log_recv_excl(0, 0) == doctest::Approx(std::log(kReceiverGuard)));
}

TEST_CASE("edge density examples") {
  ModelParams P = ModelParams::zeros(10, 2, 2);
  Precompute pre = softmax_terms(P);
  WeightFamily f;
  NoiseLaw law(20.0);
  const double expected_noise = std::log(1.0 / 90.0) + std::log(20.0) - 2.0;
  CHECK(edge_cluster_log_density(P, pre, f, law, {2, 7, 0.1}, 0) ==
        doctest::Approx(expected_noise).epsilon(1e-14));
  const double expected = -std::log(10.0) - std::log(9.0) - 0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(edge_cluster_log_density(P, pre, f, law, {2, 7, 0.0}, 1) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("edge density table matches the independent reference") {
  const Json fx = testing::fixture("edge_density_small.json");
  ModelParams P = params_from_json(fx.at("params"));
  Network net = testing::network_from_fixture(fx, P.n());
  NoiseLaw law(fx.at("noise_rate").get<double>());
  WeightFamily f;
  Precompute pre = softmax_terms(P);
  RowMatrix L = edge_log_densities(P, pre, f, law, net);
  const Json& ref = fx.at("log_density");
  REQUIRE(static_cast<std::size_t>(L.rows()) == ref.size());
  for (Eigen::Index m = 0; m < L.rows(); ++m)
    for (Eigen::Index k = 0; k < L.cols(); ++k) {
      const Json& cell = ref[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
      if (cell.is_null()) {
        CHECK(std::isinf(L(m, k)));
        continue;
      }
      CHECK(std::abs(L(m, k) - cell.get<double>()) <= 1e-12 * std::max(1.0, std::abs(L(m, k))));
      const Edge& e = net.edge(static_cast<std::size_t>(m));
      if (k > 0 || e.weight > 0.0)
        CHECK(edge_cluster_log_density(P, pre, f, law, e, static_cast<ClusterId>(k)) ==
              doctest::Approx(L(m, k)).epsilon(1e-13));
    }
}

TEST_CASE("edge densities agree with the C++ oracle for every variant") {
  std::mt19937_64 rng(21);
  for (bool lognormal : {false, true})
    for (bool weighted : {false, true})
      for (bool noise : {false, true}) {
        ModelParams P = testing::random_params(rng, 11, 3, 2);
        Network net = testing::random_network(rng, 11, 30);
        oracle::Setting s{2.5, lognormal, {weighted, noise}};
        WeightFamily f(lognormal ? FamilyKind::kLogNormal : FamilyKind::kNormal);
        RowMatrix L = edge_log_densities(P, softmax_terms(P), f, NoiseLaw(2.5), net, s.variant);
        for (Eigen::Index m = 0; m < L.rows(); ++m)
          for (Eigen::Index k = 0; k < L.cols(); ++k) {
            const double ref = oracle::edge_log_density(P, net.edge(static_cast<std::size_t>(m)),
                                                        static_cast<std::size_t>(k), s);
            if (std::isinf(ref)) {
              CHECK(std::isinf(L(m, k)));
            } else {
              CHECK(L(m, k) == doctest::Approx(ref).epsilon(1e-12));
            }
          }
      }
}

TEST_CASE("count factors are shared by both variants") {
  std::mt19937_64 rng(2);
  ModelParams P = testing::random_params(rng, 8, 2, 3);
  Network net = testing::random_network(rng, 8, 25);
  WeightFamily f;
  NoiseLaw law(1.0);
  Precompute pre = softmax_terms(P);
  RowMatrix full = edge_log_densities(P, pre, f, law, net, {true, true});
  RowMatrix counts = edge_log_densities(P, pre, f, law, net, {false, false});
  for (Eigen::Index m = 0; m < full.rows(); ++m) {
    const Edge& e = net.edge(static_cast<std::size_t>(m));
    CHECK(std::isinf(counts(m, 0)));
    for (Eigen::Index k = 1; k < full.cols(); ++k) {
      const double w = f.log_density(e.weight, eta(P, e.sender, e.receiver, static_cast<ClusterId>(k)),
                                     P.phi(k - 1));
      CHECK(full(m, k) - w == doctest::Approx(counts(m, k)).epsilon(1e-13));
    }
  }
}

TEST_CASE("complete log-likelihood") {
  std::mt19937_64 rng(12);
  const Json fx = testing::fixture("mean_field_tiny.json");
  ModelParams P = params_from_json(fx.at("params"));
  Network net = testing::network_from_fixture(fx, P.n());
  WeightFamily f;
  NoiseLaw law(fx.at("noise_rate").get<double>());
  oracle::Setting s{law.rate(), false, {}};
  const std::vector<double> t = {0.35, 0.65};
  const double t0 = 0.2;

  std::uniform_int_distribution<std::size_t> pick(0, 2);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<ClusterId> z(net.n_edges());
    for (auto& k : z) k = pick(rng);
    double brute = 0.0;
    for (std::size_t m = 0; m < z.size(); ++m) {
      brute += z[m] == 0 ? std::log(t0) : std::log(t[z[m] - 1]) + std::log(1.0 - t0);
      brute += oracle::edge_log_density(P, net.edge(m), z[m], s);
    }
    CHECK(std::abs(complete_log_likelihood(P, f, law, net, z, t0, t) - brute) <= 1e-10);
  }

  SUBCASE("single noise edge") {
    Network one(5, {{1, 3, 0.4}});
    std::vector<ClusterId> z = {0};
    const double v = complete_log_likelihood(P, f, law, one, z, t0, t);
    CHECK(v == doctest::Approx(std::log(t0) - std::log(20.0) + law.log_density(0.4)).epsilon(1e-14));
  }
  SUBCASE("one structural cluster factorizes") {
    std::vector<ClusterId> z(net.n_edges(), 2);
    Precompute pre = softmax_terms(P);
    double dens = 0.0;
    for (const Edge& e : net.edges()) dens += edge_cluster_log_density(P, pre, f, law, e, 2);
    const double M = static_cast<double>(net.n_edges());
    CHECK(complete_log_likelihood(P, f, law, net, z, t0, t) ==
          doctest::Approx(M * (std::log(t[1]) + std::log(1 - t0)) + dens).epsilon(1e-13));
  }
  SUBCASE("bad inputs") {
    std::vector<ClusterId> short_z = {1};
    CHECK_THROWS_AS(complete_log_likelihood(P, f, law, net, short_z, t0, t), DomainError);
    std::vector<ClusterId> z(net.n_edges(), 3);
    CHECK_THROWS_AS(complete_log_likelihood(P, f, law, net, z, t0, t), DomainError);
  }
}

TEST_CASE("precompute aggregates") {
  ModelParams Z = ModelParams::zeros(2, 1, 3);
  Precompute pz = softmax_terms(Z);
  CHECK(pz.f_u(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(pz.f_v(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(pz.s_u(0).norm() == 0.0);

  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    ModelParams P = testing::random_params(rng, 13, 3, 2);
    Network net = testing::random_network(rng, 13, 45);
    RowMatrix resp = testing::random_resp(rng, net, 3);
    Precompute pre = refresh_precompute(P, net, resp);

    for (std::size_t k = 0; k < 3; ++k) {
      double fu = 0.0, fv = 0.0;
      Eigen::VectorXd su = Eigen::VectorXd::Zero(2), sv = Eigen::VectorXd::Zero(2);
      for (Eigen::Index i = 0; i < 13; ++i) {
        const double a = std::exp(P.S1(i) + P.U.row(i).dot(P.Y.row(static_cast<Eigen::Index>(k))));
        const double b = std::exp(P.R1(i) + P.V.row(i).dot(P.Y.row(static_cast<Eigen::Index>(k))));
        CHECK(pre.f_u(k) >= a);
        fu += a;
        fv += b;
        su += a * P.U.row(i).transpose();
        sv += b * P.V.row(i).transpose();
      }
      CHECK(pre.f_u(k) == doctest::Approx(fu).epsilon(1e-13));
      CHECK(pre.f_v(k) == doctest::Approx(fv).epsilon(1e-13));
      CHECK((pre.s_u(k) - su).norm() <= 1e-12 * std::max(1.0, su.norm()));
      CHECK((pre.s_v(k) - sv).norm() <= 1e-12 * std::max(1.0, sv.norm()));

      double H = 0.0;
      for (std::size_t m = 0; m < net.n_edges(); ++m) {
        const auto i = static_cast<Eigen::Index>(net.edge(m).sender);
        H += resp(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k + 1)) /
             (fv - std::exp(P.R1(i) + P.V.row(i).dot(P.Y.row(static_cast<Eigen::Index>(k)))));
      }
      CHECK(pre.H(k) == doctest::Approx(H).epsilon(1e-12));

      const double col = resp.col(static_cast<Eigen::Index>(k + 1)).sum();
      CHECK(pre.p_dot(static_cast<Eigen::Index>(k)) == doctest::Approx(col).epsilon(1e-14));
      CHECK(pre.p_send.col(static_cast<Eigen::Index>(k)).sum() == doctest::Approx(col).epsilon(1e-13));
      CHECK(pre.p_recv.col(static_cast<Eigen::Index>(k)).sum() == doctest::Approx(col).epsilon(1e-13));
    }
  }
}

TEST_CASE("normalization over random draws") {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    ModelParams P = testing::random_params(rng, 15, 2, 3, 2.0);
    Precompute pre = softmax_terms(P);
    for (std::size_t k = 1; k <= 2; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < 15; ++i) s += std::exp(sender_log_prob(P, pre, i, k));
      CHECK(std::abs(s - 1.0) <= 1e-12);
      for (std::size_t i = 0; i < 15; ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < 15; ++j)
          if (j != i) r += std::exp(receiver_log_prob(P, pre, j, i, k));
        CHECK(std::abs(r - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("parameter and prior validation") {
  ModelParams P = ModelParams::zeros(4, 2, 2);
  CHECK_NOTHROW(P.validate());
  P.phi(1) = 0.0;
  CHECK_THROWS_AS(P.validate(), DomainError);
  P = ModelParams::zeros(4, 2, 2);
  P.Sigma_UV << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(P.validate(), DomainError);
  P = ModelParams::zeros(4, 2, 2);
  P.U(0, 0) = std::nan("");
  CHECK_THROWS_AS(P.validate(), DomainError);

  PriorConfig pr;
  CHECK_NOTHROW(pr.validate());
  pr.b_alpha = 0.0;
  CHECK_THROWS_AS(pr.validate(), DomainError);

  PriorConfig scaled = data_scaled_prior(PriorConfig{}, 100, 0.5);
  CHECK(scaled.Psi0_SR1(0, 0) == doctest::Approx(0.5 * (3.0 + 100.0 + 3.0)));
  CHECK(scaled.Psi0_UV(1, 1) == doctest::Approx(0.5 * (3.0 + 400.0 + 3.0)));
  CHECK(scaled.Psi0_UV(0, 1) == 0.0);
  CHECK_THROWS_AS(data_scaled_prior(PriorConfig{}, 10, 0.0), DomainError);
}

}  // TEST_SUITE
