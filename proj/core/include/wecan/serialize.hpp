#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "wecan/estimation.hpp"
#include "wecan/fit.hpp"
#include "wecan/simgen.hpp"

namespace wecan {

using Json = nlohmann::json;

Json to_json(const ModelParams& params);
ModelParams params_from_json(const Json& j);

Json to_json(const PriorConfig& prior);
/// Overlays the keys present in `j` onto `base`; unknown keys throw
/// DomainError.
PriorConfig prior_from_json(const Json& j, PriorConfig base = {});

Json to_json(const SimConfig& config);
SimConfig sim_config_from_json(const Json& j, SimConfig base = {});

/// Overlays the "options" object of a config file (keys as written by
/// fit_to_json, plus "threads"); unknown keys throw DomainError.
FitOptions options_from_json(const Json& j, FitOptions base = {});

/// Everything a downstream consumer needs: labels, scores, trace, restarts,
/// fitted parameters, mixture weights and the settings that produced them.
Json fit_to_json(const FitResult& result, const FitContext& ctx, const FitOptions& options);

/// The "assignments" array of a fit document.
std::vector<ClusterId> assignments_from_fit_json(const Json& j);

/// CSV with header edge,sender,receiver,weight,cluster; edges are 1-based,
/// nodes are written by label.
void write_assignments_csv(std::ostream& out, const Network& net,
                           const std::vector<ClusterId>& assignments);

/// CSV with header edge,cluster; edges 1-based.
void write_truth_csv(std::ostream& out, const std::vector<ClusterId>& truth);
/// Reads a truth CSV as written by write_truth_csv. Edge indices must run
/// 1..M in order. Throws ParseError on malformed rows.
std::vector<ClusterId> read_truth_csv(std::istream& in);

Json read_json_file(const std::filesystem::path& path);

}  // namespace wecan
