#pragma once

#include "wecan/estimation.hpp"

namespace wecan::detail {

/// Responsibility aggregates that stay fixed while theta moves in the M-step.
struct EdgeMass {
  const RowMatrix* resp = nullptr;
  RowMatrix p_send, p_recv;  // n x K
  Eigen::VectorXd p_dot;     // K
};

EdgeMass edge_mass(const FitContext& ctx, const RowMatrix& resp);

/// Precompute with the responsibility fields filled from `mass`.
Precompute precompute_with_mass(const ModelParams& params, const EdgeMass& mass);

/// Terms of Q that depend on the CG block: expected structural
/// log-likelihood plus the priors on S1, R1, S2, R2, U, V, Y, Lambda, phi at
/// the current covariances and lambda. Fills `grad` when non-null.
double cg_objective(const FitContext& ctx, const ModelParams& params, const EdgeMass& mass,
                    Gradient* grad);

/// Positive approximation to the diagonal of -d2Q over the CG block, with phi
/// entries taken with respect to log(phi). Used to precondition CG.
Gradient curvature_diagonal(const FitContext& ctx, const ModelParams& params, const EdgeMass& mass);

}  // namespace wecan::detail
