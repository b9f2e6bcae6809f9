#include "wecan/fit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "vbgem.hpp"
#include "wecan/init.hpp"

namespace wecan {

namespace detail {

VbgemRun run_vbgem(const FitContext& ctx, ModelParams params, VariationalState state,
                   std::vector<ClusterId> previous, const FitOptions& options, bool mstep_first) {
  VbgemRun run;
  if (!mstep_first) {
    EStepResult e = e_step(ctx, params, std::move(state), options.e_step);
    state = std::move(e.state);
    previous = hard_assignments(state.resp);
  }
  for (std::size_t iter = 1; iter <= options.max_outer; ++iter) {
    MStepReport ms = m_step(ctx, params, state, options.m_step);
    params = std::move(ms.params);
    EStepResult e = e_step(ctx, params, std::move(state), options.e_step);
    state = std::move(e.state);
    if (!std::isfinite(e.elbo))
      throw NumericalError("ELBO became non-finite at outer iteration " + std::to_string(iter));
    run.elbo_trace.push_back(e.elbo);
    run.n_outer_iterations = iter;

    std::vector<ClusterId> current = hard_assignments(state.resp);
    const Convergence c = check_convergence(previous, current, iter, options.max_outer);
    previous = std::move(current);
    if (c != Convergence::kContinue) {
      run.converged = c == Convergence::kConverged;
      break;
    }
  }
  run.params = std::move(params);
  run.state = std::move(state);
  run.assignments = std::move(previous);
  return run;
}

}  // namespace detail

namespace {

FitResult finalize(const FitContext& ctx, detail::VbgemRun run, const FitOptions& options,
                   std::uint64_t seed) {
  FitResult r;
  const PruneResult prune = prune_and_count(run.state, options.mass_threshold);
  r.assignments = relabel(run.state.resp, prune);
  r.cluster_map = prune.new_to_old;
  r.K_effective = prune.K_effective;
  std::vector<ClusterId> original(r.assignments.size());
  for (std::size_t m = 0; m < original.size(); ++m) original[m] = prune.new_to_old[r.assignments[m]];
  r.icl = icl(ctx, run.params, original);
  r.params = std::move(run.params);
  r.state = std::move(run.state);
  r.elbo_trace = std::move(run.elbo_trace);
  r.n_outer_iterations = run.n_outer_iterations;
  r.converged = run.converged;
  r.seed = seed;
  return r;
}

}  // namespace

FitResult fit_single(const FitContext& ctx, const FitOptions& options, std::uint64_t seed) {
  if (ctx.variant.weighted) {
    InitResult init = initialize(ctx, options, seed);
    VariationalState state = initial_state(ctx, init.params, std::move(init.resp));
    auto run = detail::run_vbgem(ctx, std::move(init.params), std::move(state),
                                 std::move(init.assignments), options, /*mstep_first=*/true);
    return finalize(ctx, std::move(run), options, seed);
  }
  ModelParams params = random_start(ctx, seed, options.init_scale, options.init_radius);
  const auto M = static_cast<Eigen::Index>(ctx.net.n_edges());
  const auto K = static_cast<Eigen::Index>(ctx.K());
  RowMatrix resp = RowMatrix::Zero(M, K + 1);
  resp.rightCols(K).setConstant(1.0 / static_cast<double>(K));
  VariationalState state = initial_state(ctx, params, std::move(resp));
  auto run = detail::run_vbgem(ctx, std::move(params), std::move(state), {}, options,
                               /*mstep_first=*/false);
  return finalize(ctx, std::move(run), options, seed);
}

FitResult fit(const FitContext& ctx, const FitOptions& options) {
  if (options.seeds < 1) throw DomainError("need at least one seed");
  const std::size_t n_seeds = options.seeds;
  std::vector<std::optional<FitResult>> results(n_seeds);
  std::vector<RestartSummary> summaries(n_seeds);

  auto work = [&](std::size_t s) {
    const std::uint64_t seed = options.seed_base + s;
    RestartSummary& sum = summaries[s];
    sum.seed = seed;
    try {
      FitResult r = fit_single(ctx, options, seed);
      sum.ok = true;
      sum.icl = r.icl;
      sum.K_effective = r.K_effective;
      sum.n_outer_iterations = r.n_outer_iterations;
      sum.converged = r.converged;
      results[s] = std::move(r);
    } catch (const std::exception& ex) {
      sum.ok = false;
      sum.error = ex.what();
    }
  };

  std::size_t workers = options.threads == 0 ? std::thread::hardware_concurrency() : options.threads;
  workers = std::clamp<std::size_t>(workers, 1, n_seeds);
  if (workers == 1) {
    for (std::size_t s = 0; s < n_seeds; ++s) work(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t s = next++; s < n_seeds; s = next++) work(s);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::optional<std::size_t> best;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    if (!results[s]) continue;
    if (!best || results[s]->icl > results[*best]->icl) best = s;
  }
  if (!best) {
    std::string msg = "all " + std::to_string(n_seeds) + " restarts failed:";
    for (const auto& s : summaries) msg += "\n  seed " + std::to_string(s.seed) + ": " + s.error;
    throw FitError(msg, summaries);
  }
  FitResult out = std::move(*results[*best]);
  out.restarts = std::move(summaries);
  return out;
}

}  // namespace wecan
