#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uknow/corpus.hpp"
#include "uknow/features.hpp"
#include "uknow/symbolize.hpp"

namespace uknow {

// One triple <head, code, tail>. Similarity edges carry their cosine as
// weight; every other edge has weight 1.
struct Edge {
  NodeIndex head = 0;
  EdgeCode code = 0;
  NodeIndex tail = 0;
  double weight = 1.0;

  bool same_triple(const Edge& o) const {
    return head == o.head && code == o.code && tail == o.tail;
  }
  bool operator==(const Edge&) const = default;
};

inline bool triple_less(const Edge& a, const Edge& b) {
  if (a.head != b.head) return a.head < b.head;
  if (a.code != b.code) return a.code < b.code;
  return a.tail < b.tail;
}

struct Graph {
  NodeTable nodes;
  std::vector<Edge> edges;  // sorted by (head, code, tail), unique
  double tau = 0.8;
  std::uint64_t build_seed = 0;
  std::map<std::string, std::string> provenance;
  EdgeRegistry registry = EdgeRegistry::defaults();

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_triples() const { return edges.size(); }

  bool operator==(const Graph&) const = default;
};

// Undirected incidence lists in CSR form. Neighbors of a node are listed in
// edge order; a node linked by several edges appears once per edge.
class Adjacency {
 public:
  Adjacency() = default;
  Adjacency(std::size_t num_nodes, std::span<const Edge> edges);

  struct Incidence {
    NodeIndex neighbor;
    std::uint32_t edge;  // index into the edge span
  };

  std::span<const Incidence> operator[](NodeIndex v) const {
    return {incidences_.data() + offsets_[v], incidences_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeIndex v) const { return offsets_[v + 1] - offsets_[v]; }
  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Incidence> incidences_;
};

// Detection edges (image -> object, code = class) and NER edges
// (text -> entity, code = 80 + type).
std::vector<Edge> build_internal_edges(const NodeTable& nodes);

// Structural and event annotation edges (codes 098-104, 106-109).
std::vector<Edge> build_annotation_edges(const NodeTable& nodes,
                                         const std::vector<NewsRecord>& news);

struct SimilarityOptions {
  double tau = 0.8;
  // Per node and code, keep only the k most similar partners (0 = no cap).
  // An edge survives if either endpoint keeps it.
  std::size_t top_k = 0;
};

// Cosine edges (codes 105, 110-113) for every eligible unordered pair with
// cosine >= tau; head is the lower global id.
std::vector<Edge> build_similarity_edges(const NodeTable& nodes,
                                         const SimilarityOptions& options);

Graph assemble_graph(NodeTable nodes, std::span<const std::vector<Edge>> edge_lists,
                     double tau, std::uint64_t seed,
                     const EdgeRegistry& registry = edge_registry());

struct BuildOptions {
  double tau = 0.8;
  std::uint64_t seed = 0;
  std::size_t sim_top_k = 0;
  EdgeRegistry registry = EdgeRegistry::defaults();
};

// assign_nodes followed by all edge builders and assemble_graph.
Graph build_graph(const Corpus& corpus, const FeatureStore& features,
                  const BuildOptions& options);

std::map<View, std::size_t> view_counts(const Graph& graph);

bool is_similarity_code(EdgeCode code);

}  // namespace uknow
