#include "wecan/family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "wecan/error.hpp"
#include "wecan/network.hpp"

namespace wecan {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}

std::string_view to_string(FamilyKind kind) {
  return kind == FamilyKind::kNormal ? "normal" : "lognormal";
}

FamilyKind parse_family(std::string_view name) {
  if (name == "normal") return FamilyKind::kNormal;
  if (name == "lognormal" || name == "log-normal") return FamilyKind::kLogNormal;
  throw DomainError("unknown weight family '" + std::string(name) + "'");
}

bool WeightFamily::in_support(double w) const {
  if (!std::isfinite(w)) return false;
  return kind_ == FamilyKind::kNormal || w > 0.0;
}

double WeightFamily::transform(double w) const {
  if (!in_support(w))
    throw DomainError("weight " + std::to_string(w) + " outside the " +
                      std::string(to_string(kind_)) + " support");
  return kind_ == FamilyKind::kNormal ? w : std::log(w);
}

double WeightFamily::log_h(double w, double phi) const {
  const double y = transform(w);
  const double jac = kind_ == FamilyKind::kNormal ? 0.0 : -y;
  return -kHalfLog2Pi - std::log(phi) - y * y / (2.0 * phi * phi) + jac;
}

double WeightFamily::dlogh_dphi(double w, double phi) const {
  const double y = transform(w);
  return y * y / (phi * phi * phi) - 1.0 / phi;
}

double WeightFamily::log_density_y(double y, double log_jacobian, double eta,
                                   double phi) const {
  const double r = (y - eta) / phi;
  return -kHalfLog2Pi - std::log(phi) - 0.5 * r * r + log_jacobian;
}

FamilyDerivatives WeightFamily::derivatives_y(double y, double eta, double phi) const {
  const double a = phi * phi;
  const double r = y - eta;
  return {r / a, r * r / (a * phi) - 1.0 / phi};
}

double WeightFamily::log_density(double w, double eta, double phi) const {
  if (!(phi > 0.0)) throw DomainError("dispersion must be positive");
  const double y = transform(w);
  // Written in the h / A / a decomposition rather than the collapsed normal
  // form so the generic structure stays visible.
  return log_h(w, phi) + (eta * y - A(eta)) / a(phi) - log_pr_nonzero(eta);
}

FamilyDerivatives WeightFamily::derivatives(double w, double eta, double phi) const {
  if (!(phi > 0.0)) throw DomainError("dispersion must be positive");
  const double y = transform(w);
  const double d_eta = (y - dA_deta(eta)) / a(phi) - dlogpr_deta(eta);
  const double d_phi = dlogh_dphi(w, phi) -
                       (eta * y - A(eta)) / (a(phi) * a(phi)) * da_dphi(phi) -
                       dlogpr_dphi(eta, phi);
  return {d_eta, d_phi};
}

NoiseLaw::NoiseLaw(double rate) : rate_(rate) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw DomainError("noise rate must be positive and finite");
}

double NoiseLaw::log_density(double w) const {
  if (!(w > 0.0)) throw DomainError("noise weight must be positive, got " + std::to_string(w));
  return std::log(rate_) - rate_ * w;
}

double NoiseLaw::log_density_or_ninf(double w) const {
  if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(rate_) - rate_ * w;
}

double default_noise_rate(const Network& net) {
  std::vector<double> positive;
  positive.reserve(net.n_edges());
  for (const Edge& e : net.edges())
    if (e.weight > 0.0) positive.push_back(e.weight);
  if (positive.empty()) return 1.0;
  std::sort(positive.begin(), positive.end());
  const std::size_t take = std::max<std::size_t>(1, positive.size() / 4);
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += positive[i];
  const double mean = std::max(sum / static_cast<double>(take),
                               std::numeric_limits<double>::epsilon());
  return 1.0 / mean;
}

}  // namespace wecan
