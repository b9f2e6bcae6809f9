#pragma once

#include <vector>

#include "wecan/estimation.hpp"
#include "wecan/fit.hpp"

namespace wecan::detail {

struct VbgemRun {
  ModelParams params;
  VariationalState state;
  std::vector<ClusterId> assignments;
  std::vector<double> elbo_trace;
  std::size_t n_outer_iterations = 0;
  bool converged = false;
};

/// Alternates M- and E-steps until the hard assignments stop changing or
/// max_outer is reached. Without `mstep_first`, an initial E-step builds the
/// responsibilities from `params` first; it is not counted as an iteration.
VbgemRun run_vbgem(const FitContext& ctx, ModelParams params, VariationalState state,
                   std::vector<ClusterId> previous, const FitOptions& options, bool mstep_first);

}  // namespace wecan::detail
