#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "support.hpp"
#include "wecan/error.hpp"
#include "wecan/family.hpp"

using namespace wecan;

namespace {

// Gauss-Hermite nodes and weights (weight function exp(-x^2)) by Golub-Welsch.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int order) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Eigen::VectorXd w = std::sqrt(std::numbers::pi) * es.eigenvectors().row(0).array().square();
  return {es.eigenvalues(), w};
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("family") {

TEST_CASE("normal density examples") {
  WeightFamily f(FamilyKind::kNormal);
  const double c = -0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(f.log_density(0.0, 0.0, 1.0) == doctest::Approx(-0.9189385).epsilon(1e-7));
  for (double eta : {-3.0, 0.2, 7.5}) CHECK(f.log_density(eta, eta, 1.0) == doctest::Approx(c).epsilon(1e-14));
  CHECK(f.derivatives(0.4, 0.4, 2.0).d_eta == 0.0);
  CHECK(f.derivatives(1.0, 0.0, 1.0).d_eta == doctest::Approx(1.0));
}

TEST_CASE("normal family contract") {
  WeightFamily f(FamilyKind::kNormal);
  for (double eta : {-2.0, 0.0, 1.3}) {
    CHECK(f.A(eta) == 0.5 * eta * eta);
    CHECK(f.dA_deta(eta) == eta);
    CHECK(f.log_pr_nonzero(eta) == 0.0);
    CHECK(f.dlogpr_deta(eta) == 0.0);
    CHECK(f.dlogpr_dphi(eta, 0.7) == 0.0);
  }
  for (double phi : {1e-3, 0.5, 4.0}) {
    CHECK(f.a(phi) > 0.0);
    CHECK(f.a(phi) == phi * phi);
  }
  CHECK(f.in_support(-5.0));
  CHECK(f.in_support(0.0));
}

TEST_CASE("lognormal support") {
  WeightFamily f(FamilyKind::kLogNormal);
  CHECK_FALSE(f.in_support(0.0));
  CHECK_FALSE(f.in_support(-1.0));
  CHECK_THROWS_AS(f.log_density(0.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(f.log_density(-2.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(WeightFamily().log_density(1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("lognormal matches the scipy reference") {
  WeightFamily f(FamilyKind::kLogNormal);
  const Json cases = testing::fixture("lognormal_density.json").at("cases");
  REQUIRE(cases.size() == 40);
  for (const auto& c : cases) {
    const double got = f.log_density(c.at("w"), c.at("eta"), c.at("phi"));
    CHECK(std::abs(got - c.at("log_density").get<double>()) <= 1e-12 * std::max(1.0, std::abs(got)));
  }
}

TEST_CASE("lognormal is the normal law on log w with a Jacobian") {
  WeightFamily ln(FamilyKind::kLogNormal), nm(FamilyKind::kNormal);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 20.0), e(-2, 2), p(0.1, 3);
  for (int t = 0; t < 200; ++t) {
    const double w = u(rng), eta = e(rng), phi = p(rng);
    CHECK(ln.log_density(w, eta, phi) ==
          doctest::Approx(nm.log_density(std::log(w), eta, phi) - std::log(w)).epsilon(1e-13));
    CHECK(ln.derivatives(w, eta, phi).d_eta ==
          doctest::Approx(nm.derivatives(std::log(w), eta, phi).d_eta).epsilon(1e-13));
  }
}

TEST_CASE("derivatives agree with central differences") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uw(-4.0, 4.0), upos(0.05, 8.0), ue(-3.0, 3.0), up(0.2, 3.0);
  for (FamilyKind kind : {FamilyKind::kNormal, FamilyKind::kLogNormal}) {
    WeightFamily f(kind);
    for (int t = 0; t < 1000; ++t) {
      const double w = kind == FamilyKind::kNormal ? uw(rng) : upos(rng);
      const double eta = ue(rng), phi = up(rng);
      const double h = 1e-6;
      const double fd_eta = (f.log_density(w, eta + h, phi) - f.log_density(w, eta - h, phi)) / (2 * h);
      const double fd_phi = (f.log_density(w, eta, phi + h) - f.log_density(w, eta, phi - h)) / (2 * h);
      const FamilyDerivatives d = f.derivatives(w, eta, phi);
      CHECK(rel_err(d.d_eta, fd_eta) <= 1e-5);
      CHECK(rel_err(d.d_phi, fd_phi) <= 1e-5);
      const FamilyDerivatives dy = f.derivatives_y(f.transform(w), eta, phi);
      CHECK(dy.d_eta == doctest::Approx(d.d_eta).epsilon(1e-12));
      CHECK(dy.d_phi == doctest::Approx(d.d_phi).epsilon(1e-10));
    }
  }
}

TEST_CASE("normal density integrates to one") {
  auto [x, wt] = gauss_hermite(60);
  WeightFamily f;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ue(-5.0, 5.0), up(0.05, 4.0);
  for (int t = 0; t < 50; ++t) {
    const double eta = ue(rng), phi = up(rng);
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double w = eta + std::sqrt(2.0) * phi * x(i);
      total += wt(i) * std::exp(x(i) * x(i) + f.log_density(w, eta, phi)) * std::sqrt(2.0) * phi;
    }
    CHECK(std::abs(total - 1.0) <= 1e-8);
  }
}

TEST_CASE("lognormal density integrates to one") {
  WeightFamily f(FamilyKind::kLogNormal);
  boost::math::quadrature::exp_sinh<double> integrator;
  for (auto [eta, phi] : {std::pair{0.0, 1.0}, {1.5, 0.3}, {-1.0, 0.8}}) {
    const double total =
        integrator.integrate([&](double w) { return std::exp(f.log_density(w, eta, phi)); });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("noise law") {
  NoiseLaw law(20.0);
  CHECK(law.log_density(0.1) == doctest::Approx(std::log(20.0) - 2.0).epsilon(1e-14));
  CHECK(law.log_density(0.1) == doctest::Approx(0.9957).epsilon(1e-4));
  CHECK(NoiseLaw(1.0).log_density(1e-300) == doctest::Approx(0.0));
  CHECK_THROWS_AS(law.log_density(0.0), DomainError);
  CHECK_THROWS_AS(law.log_density(-1.0), DomainError);
  CHECK(std::isinf(law.log_density_or_ninf(-1.0)));
  CHECK_THROWS_AS(NoiseLaw(0.0), DomainError);
  CHECK_THROWS_AS(NoiseLaw(-2.0), DomainError);

  // Integral of rate exp(-rate w) over (0, inf) is one.
  boost::math::quadrature::exp_sinh<double> integrator;
  const double total = integrator.integrate([&](double w) { return std::exp(law.log_density(w)); });
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("noise sampler mean") {
  NoiseLaw law(20.0);
  std::mt19937_64 rng(99);
  const int N = 1000000;
  double sum = 0.0;
  for (int i = 0; i < N; ++i) sum += law.sample(rng);
  const double mean = sum / N;
  const double se = (1.0 / 20.0) / std::sqrt(static_cast<double>(N));
  CHECK(std::abs(mean - 0.05) <= 3.0 * se);
}

TEST_CASE("default noise rate") {
  // Positive weights 1..8: the lowest quarter is {1, 2}, mean 1.5.
  std::vector<Edge> edges;
  for (int w = 1; w <= 8; ++w) edges.push_back({0, 1, static_cast<double>(w)});
  edges.push_back({1, 0, -3.0});
  CHECK(default_noise_rate(Network(2, edges)) == doctest::Approx(1.0 / 1.5));
  CHECK(default_noise_rate(Network(2, {{0, 1, -1.0}})) == 1.0);
  CHECK(default_noise_rate(Network(2, {{0, 1, 0.4}})) == doctest::Approx(2.5));
}

TEST_CASE("family names") {
  CHECK(parse_family("normal") == FamilyKind::kNormal);
  CHECK(parse_family("lognormal") == FamilyKind::kLogNormal);
  CHECK(to_string(FamilyKind::kLogNormal) == "lognormal");
  CHECK_THROWS_AS(parse_family("poisson"), DomainError);
}

}  // TEST_SUITE
