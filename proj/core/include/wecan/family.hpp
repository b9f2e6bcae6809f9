#pragma once

#include <random>
#include <span>
#include <string>
#include <string_view>

namespace wecan {

class Network;

enum class FamilyKind { kNormal, kLogNormal };

std::string_view to_string(FamilyKind kind);
FamilyKind parse_family(std::string_view name);

/// Partial derivatives of a structural log-density.
struct FamilyDerivatives {
  double d_eta = 0.0;
  double d_phi = 0.0;
};

/// Exponential-family law for structural edge weights,
///
///   log f(w | eta, phi) = log h(w, phi) + (eta y - A(eta)) / a(phi)
///                         - log Pr(w != 0 | eta),
///
/// with y = w (normal) or y = log w (log-normal). Both shipped families have
/// A(eta) = eta^2 / 2, a(phi) = phi^2, and Pr(w != 0 | eta) = 1, so phi is the
/// standard deviation of y. The log-normal h carries the -log w Jacobian, which
/// is constant in every parameter.
class WeightFamily {
 public:
  explicit WeightFamily(FamilyKind kind = FamilyKind::kNormal) : kind_(kind) {}

  FamilyKind kind() const { return kind_; }
  bool in_support(double w) const;
  /// Sufficient statistic y(w). Throws DomainError outside the support.
  double transform(double w) const;

  double log_h(double w, double phi) const;
  double dlogh_dphi(double w, double phi) const;
  double A(double eta) const { return 0.5 * eta * eta; }
  double dA_deta(double eta) const { return eta; }
  double a(double phi) const { return phi * phi; }
  double da_dphi(double phi) const { return 2.0 * phi; }
  double log_pr_nonzero(double /*eta*/) const { return 0.0; }
  double dlogpr_deta(double /*eta*/) const { return 0.0; }
  double dlogpr_dphi(double /*eta*/, double /*phi*/) const { return 0.0; }

  double log_density(double w, double eta, double phi) const;
  FamilyDerivatives derivatives(double w, double eta, double phi) const;

  /// Same as log_density/derivatives but with y = transform(w) and the
  /// Jacobian term already known; used on hot paths.
  double log_density_y(double y, double log_jacobian, double eta, double phi) const;
  FamilyDerivatives derivatives_y(double y, double eta, double phi) const;

 private:
  FamilyKind kind_;
};

/// Exponential law for noise-edge weights, density rate * exp(-rate * w) on
/// w > 0.
class NoiseLaw {
 public:
  explicit NoiseLaw(double rate);

  double rate() const { return rate_; }
  /// log(rate) - rate * w. Throws DomainError for w <= 0.
  double log_density(double w) const;
  /// Like log_density but returns -inf outside the support.
  double log_density_or_ninf(double w) const;

  template <class Rng>
  double sample(Rng& rng) const {
    return std::exponential_distribution<double>(rate_)(rng);
  }

 private:
  double rate_;
};

/// Default noise rate when none is given: 1 / mean of the lowest quarter of
/// the positive weights (log-normal: of the weights themselves, not their
/// logs). The mean is floored at machine epsilon.
double default_noise_rate(const Network& net);

}  // namespace wecan
