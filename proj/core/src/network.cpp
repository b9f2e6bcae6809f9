#include "wecan/network.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <utility>

#include "wecan/error.hpp"

namespace wecan {

Network::Network(std::size_t n_nodes, std::vector<Edge> edges,
                 std::vector<std::string> node_labels)
    : n_nodes_(n_nodes), edges_(std::move(edges)), labels_(std::move(node_labels)) {
  if (n_nodes_ < 2) throw DomainError("network needs at least two nodes");
  if (edges_.empty()) throw DomainError("network has no edges");
  if (!labels_.empty() && labels_.size() != n_nodes_)
    throw DomainError("node_labels size " + std::to_string(labels_.size()) +
                      " does not match n_nodes " + std::to_string(n_nodes_));
  for (std::size_t m = 0; m < edges_.size(); ++m) {
    const Edge& e = edges_[m];
    if (e.sender >= n_nodes_ || e.receiver >= n_nodes_)
      throw DomainError("edge " + std::to_string(m) + " has endpoint out of range");
    if (e.sender == e.receiver)
      throw DomainError("edge " + std::to_string(m) + " is a self-loop");
    if (!std::isfinite(e.weight))
      throw DomainError("edge " + std::to_string(m) + " has non-finite weight");
  }
  for (NodeId i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second)
      throw DomainError("duplicate node label '" + labels_[i] + "'");
  }
}

std::string Network::label(NodeId i) const {
  return labels_.empty() ? std::to_string(i) : labels_.at(i);
}

std::optional<NodeId> Network::find_label(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

char delimiter(EdgeListFormat format) {
  return format == EdgeListFormat::kCsv ? ',' : '\t';
}

std::string trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\r' || c == '\n' || c == '\t'; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double parse_weight(const std::string& field, std::size_t row) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc::result_out_of_range)
    throw ParseError(row, "weight '" + field + "' is not finite");
  if (ec != std::errc() || ptr != last)
    throw ParseError(row, "cannot parse weight '" + field + "'");
  if (!std::isfinite(value)) throw ParseError(row, "weight '" + field + "' is not finite");
  return value;
}

}  // namespace

Network read_edge_list(std::istream& in, EdgeListFormat format, bool has_header) {
  const char delim = delimiter(format);
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> labels;
  std::vector<Edge> edges;
  auto intern = [&](const std::string& name) {
    auto [it, inserted] = ids.emplace(name, labels.size());
    if (inserted) labels.push_back(name);
    return it->second;
  };

  std::string line;
  std::size_t row = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    ++row;
    auto fields = split(line, delim);
    if (fields.size() != 3)
      throw ParseError(row, "expected 3 fields, found " + std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty())
      throw ParseError(row, "empty node identifier");
    if (fields[0] == fields[1])
      throw ParseError(row, "self-loop on node '" + fields[0] + "'");
    const double w = parse_weight(fields[2], row);
    const NodeId s = intern(fields[0]);
    const NodeId r = intern(fields[1]);
    edges.push_back({s, r, w});
  }
  if (edges.empty()) throw ParseError(row, "edge list contains no edges");
  const std::size_t n = labels.size();
  return Network(n, std::move(edges), std::move(labels));
}

Network load_edge_list(const std::string& path, EdgeListFormat format, bool has_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge list '" + path + "'");
  return read_edge_list(in, format, has_header);
}

void write_edge_list(const Network& net, std::ostream& out, EdgeListFormat format,
                     bool header) {
  const char delim = delimiter(format);
  if (header) out << "sender" << delim << "receiver" << delim << "weight\n";
  std::ostringstream buf;
  buf << std::setprecision(17);
  for (const Edge& e : net.edges()) {
    buf.str("");
    buf << e.weight;
    out << net.label(e.sender) << delim << net.label(e.receiver) << delim << buf.str()
        << '\n';
  }
}

void write_edge_list(const Network& net, const std::string& path, EdgeListFormat format,
                     bool header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write edge list '" + path + "'");
  write_edge_list(net, out, format, header);
}

NetworkSummary summarize(const Network& net) {
  NetworkSummary s;
  s.n_nodes = net.n_nodes();
  s.n_edges = net.n_edges();
  double sum = 0.0;
  for (const Edge& e : net.edges()) sum += e.weight;
  s.mean_weight = sum / static_cast<double>(s.n_edges);
  double ss = 0.0;
  for (const Edge& e : net.edges()) ss += (e.weight - s.mean_weight) * (e.weight - s.mean_weight);
  s.sd_weight = s.n_edges > 1 ? std::sqrt(ss / static_cast<double>(s.n_edges - 1)) : 0.0;

  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const Edge& e : net.edges()) pairs.emplace(e.sender, e.receiver);
  s.distinct_pairs = pairs.size();
  s.duplicate_edges = s.n_edges - s.distinct_pairs;
  const double n = static_cast<double>(s.n_nodes);
  s.density = static_cast<double>(s.distinct_pairs) / (n * (n - 1.0));
  return s;
}

}  // namespace wecan
