#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wecan/error.hpp"
#include "wecan/estimation.hpp"

namespace wecan {

struct FitOptions {
  std::size_t seeds = 15;
  std::uint64_t seed_base = 1;
  /// Restarts run concurrently on this many workers; 0 picks the hardware
  /// concurrency. Each restart is single-threaded, so results do not depend
  /// on the worker count.
  std::size_t threads = 0;
  EStepOptions e_step;
  MStepOptions m_step;
  std::size_t max_outer = 500;
  double mass_threshold = 1.0;
  /// Jitter sd and direction radius of the random latent starts of the
  /// count-only pre-fit (see random_start).
  double init_scale = 0.3;
  double init_radius = 1.5;
};

struct RestartSummary {
  std::uint64_t seed = 0;
  bool ok = false;
  double icl = 0.0;
  std::size_t K_effective = 0;
  std::size_t n_outer_iterations = 0;
  bool converged = false;
  std::string error;
};

struct FitResult {
  /// Dense labels: 0 noise, 1..K_effective structural.
  std::vector<ClusterId> assignments;
  /// Dense label -> original cluster id (entry 0 is noise).
  std::vector<ClusterId> cluster_map;
  std::size_t K_effective = 0;
  ModelParams params;
  VariationalState state;
  /// ELBO after each outer iteration.
  std::vector<double> elbo_trace;
  double icl = 0.0;
  std::size_t n_outer_iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  /// One entry per restart, in seed order; filled by fit().
  std::vector<RestartSummary> restarts;
};

class FitError : public Error {
 public:
  FitError(const std::string& what, std::vector<RestartSummary> restarts)
      : Error(what), restarts_(std::move(restarts)) {}
  const std::vector<RestartSummary>& restarts() const { return restarts_; }

 private:
  std::vector<RestartSummary> restarts_;
};

/// One VB-GEM run from the starting point derived from `seed`. For the
/// weighted variant the start comes from the count-only pre-fit; for the
/// count-only variant from random latent positions.
FitResult fit_single(const FitContext& ctx, const FitOptions& options, std::uint64_t seed);

/// Runs options.seeds restarts (seed_base, seed_base + 1, ...) and returns the
/// one with the highest ICL; ties go to the earliest seed.
FitResult fit(const FitContext& ctx, const FitOptions& options);

}  // namespace wecan
