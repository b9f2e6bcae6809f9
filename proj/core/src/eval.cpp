#include "wecan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "wecan/error.hpp"

namespace wecan {

namespace {

// Maps arbitrary labels to 0..L-1 in first-appearance order.
std::vector<std::size_t> compact(std::span<const std::size_t> labels, std::size_t& n_labels) {
  std::unordered_map<std::size_t, std::size_t> ids;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t m = 0; m < labels.size(); ++m) {
    auto [it, inserted] = ids.try_emplace(labels[m], ids.size());
    out[m] = it->second;
  }
  n_labels = ids.size();
  return out;
}

double entropy(const std::vector<double>& counts, double total) {
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= (c / total) * std::log(c / total);
  return h;
}

void check_lengths(std::size_t assignments, const Network& net) {
  if (assignments != net.n_edges())
    throw DomainError("assignment vector has " + std::to_string(assignments) +
                      " entries but the network has " + std::to_string(net.n_edges()) + " edges");
}

std::vector<NodeCount> top_nodes(const std::map<NodeId, std::size_t>& counts, std::size_t top) {
  std::vector<NodeCount> v;
  v.reserve(counts.size());
  for (const auto& [node, c] : counts) v.push_back({node, c});
  std::stable_sort(v.begin(), v.end(), [](const NodeCount& a, const NodeCount& b) { return a.count > b.count; });
  if (v.size() > top) v.resize(top);
  return v;
}

}  // namespace

double nmi(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size())
    throw DomainError("partitions differ in length: " + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  if (a.empty()) throw DomainError("partitions are empty");

  std::size_t ka = 0, kb = 0;
  const auto ca = compact(a, ka);
  const auto cb = compact(b, kb);
  if (ka == 1 && kb == 1) return 1.0;
  if (ka == 1 || kb == 1) return 0.0;

  std::vector<double> table(ka * kb, 0.0), ra(ka, 0.0), rb(kb, 0.0);
  for (std::size_t m = 0; m < ca.size(); ++m) {
    table[ca[m] * kb + cb[m]] += 1.0;
    ra[ca[m]] += 1.0;
    rb[cb[m]] += 1.0;
  }
  const double total = static_cast<double>(a.size());
  // The cell terms are summed in sorted order so that swapping the arguments,
  // which transposes the table, gives a bit-identical result.
  std::vector<double> terms;
  terms.reserve(ka * kb);
  for (std::size_t x = 0; x < ka; ++x)
    for (std::size_t y = 0; y < kb; ++y) {
      const double c = table[x * kb + y];
      if (c > 0.0) terms.push_back((c / total) * std::log(c * total / (ra[x] * rb[y])));
    }
  std::sort(terms.begin(), terms.end());
  double mi = 0.0;
  for (double t : terms) mi += t;
  const double ha = entropy(ra, total), hb = entropy(rb, total);
  const double v = mi / (0.5 * (ha + hb));
  return std::clamp(v, 0.0, 1.0);
}

NoiseReport noise_report(std::span<const ClusterId> assignments, const Network& net, double cutoff) {
  check_lengths(assignments.size(), net);
  NoiseReport r;
  r.cutoff = cutoff;
  double noise_sum = 0.0;
  for (std::size_t m = 0; m < assignments.size(); ++m) {
    const double w = net.edge(m).weight;
    const bool low = w <= cutoff;
    if (assignments[m] == kNoiseCluster) {
      (low ? r.noise_at_or_below : r.noise_above) += 1;
      noise_sum += w;
    } else {
      (low ? r.structural_at_or_below : r.structural_above) += 1;
    }
  }
  r.mean_noise_weight = r.n_noise() > 0 ? noise_sum / static_cast<double>(r.n_noise())
                                        : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::vector<ClusterRecord> cluster_summary(std::span<const ClusterId> assignments,
                                           const Network& net, std::size_t top) {
  check_lengths(assignments.size(), net);
  struct Acc {
    std::size_t n = 0;
    double sum = 0.0;
    std::vector<double> w;
    std::map<NodeId, std::size_t> senders, receivers;
  };
  std::map<ClusterId, Acc> acc;
  for (std::size_t m = 0; m < assignments.size(); ++m) {
    const Edge& e = net.edge(m);
    Acc& a = acc[assignments[m]];
    ++a.n;
    a.sum += e.weight;
    a.w.push_back(e.weight);
    ++a.senders[e.sender];
    ++a.receivers[e.receiver];
  }
  std::vector<ClusterRecord> out;
  out.reserve(acc.size());
  for (const auto& [label, a] : acc) {
    ClusterRecord r;
    r.label = label;
    r.n_edges = a.n;
    r.mean_weight = a.sum / static_cast<double>(a.n);
    if (a.n > 1) {
      double ss = 0.0;
      for (double w : a.w) ss += (w - r.mean_weight) * (w - r.mean_weight);
      r.sd_weight = std::sqrt(ss / static_cast<double>(a.n - 1));
    }
    r.top_senders = top_nodes(a.senders, top);
    r.top_receivers = top_nodes(a.receivers, top);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace wecan
