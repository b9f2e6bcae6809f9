#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace wecan {

using NodeId = std::size_t;

/// One directed, weighted edge. Node ids are dense and 0-based.
struct Edge {
  NodeId sender = 0;
  NodeId receiver = 0;
  double weight = 0.0;
};

/// Immutable directed multigraph stored as an edge list.
///
/// Invariants checked on construction: at least one edge, every endpoint in
/// [0, n_nodes), no self-loops, finite weights. Repeated (sender, receiver)
/// pairs are allowed. Weight positivity is not checked here; it depends on the
/// weight family chosen at fit time.
class Network {
 public:
  Network(std::size_t n_nodes, std::vector<Edge> edges,
          std::vector<std::string> node_labels = {});

  std::size_t n_nodes() const { return n_nodes_; }
  std::size_t n_edges() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(std::size_t m) const { return edges_[m]; }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<std::string>& node_labels() const { return labels_; }
  /// Label of node `i`, or its decimal index when the network is unlabeled.
  std::string label(NodeId i) const;
  std::optional<NodeId> find_label(const std::string& label) const;

 private:
  std::size_t n_nodes_;
  std::vector<Edge> edges_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
};

enum class EdgeListFormat { kCsv, kTsv };

/// Reads `sender,receiver,weight` rows. Nodes are indexed densely in order of
/// first appearance and their original identifiers kept as labels.
Network load_edge_list(const std::string& path, EdgeListFormat format,
                       bool has_header);
Network read_edge_list(std::istream& in, EdgeListFormat format,
                       bool has_header);

/// Writes node labels and weights with 17 significant digits, so a
/// load/write cycle reproduces every finite decimal weight bit-exactly.
void write_edge_list(const Network& net, std::ostream& out,
                     EdgeListFormat format, bool header = true);
void write_edge_list(const Network& net, const std::string& path,
                     EdgeListFormat format, bool header = true);

struct NetworkSummary {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  double mean_weight = 0.0;
  double sd_weight = 0.0;
  /// Distinct ordered pairs / (n (n - 1)).
  double density = 0.0;
  std::size_t distinct_pairs = 0;
  /// Edges whose (sender, receiver) pair already appeared earlier.
  std::size_t duplicate_edges = 0;
};

NetworkSummary summarize(const Network& net);

}  // namespace wecan
