#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wecan/model.hpp"
#include "wecan/network.hpp"

namespace wecan {

/// Normalized mutual information, I(a; b) / ((H(a) + H(b)) / 2).
/// Both partitions with a single block give 1; exactly one gives 0.
/// Labels are arbitrary non-negative integers. Throws DomainError on a length
/// mismatch or empty input.
double nmi(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct NoiseReport {
  double cutoff = 1.0;
  std::size_t noise_at_or_below = 0;
  std::size_t noise_above = 0;
  std::size_t structural_at_or_below = 0;
  std::size_t structural_above = 0;
  /// NaN when no edge is labelled noise.
  double mean_noise_weight = 0.0;

  std::size_t n_noise() const { return noise_at_or_below + noise_above; }
};

/// Cross-tabulates model noise labels against the rule "weight <= cutoff".
NoiseReport noise_report(std::span<const ClusterId> assignments, const Network& net,
                         double cutoff = 1.0);

struct NodeCount {
  NodeId node = 0;
  std::size_t count = 0;
};

struct ClusterRecord {
  ClusterId label = 0;
  std::size_t n_edges = 0;
  double mean_weight = 0.0;
  /// Sample sd (n - 1 denominator); 0 for a single edge.
  double sd_weight = 0.0;
  /// Most frequent endpoints, by count descending then node id ascending.
  std::vector<NodeCount> top_senders;
  std::vector<NodeCount> top_receivers;
};

/// One record per occupied label, in label order.
std::vector<ClusterRecord> cluster_summary(std::span<const ClusterId> assignments,
                                           const Network& net, std::size_t top = 5);

}  // namespace wecan
