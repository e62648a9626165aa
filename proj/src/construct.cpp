#include "uknow/construct.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace uknow {

Adjacency::Adjacency(std::size_t num_nodes, std::span<const Edge> edges) {
  offsets_.assign(num_nodes + 1, 0);
  for (const Edge& e : edges) {
    ++offsets_[e.head + 1];
    ++offsets_[e.tail + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  incidences_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::uint32_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    incidences_[fill[e.head]++] = {e.tail, i};
    incidences_[fill[e.tail]++] = {e.head, i};
  }
}

bool is_similarity_code(EdgeCode code) {
  return code == codes::kImageSimilarity ||
         (code >= codes::kContentContentClip && code <= codes::kTitleContentClip);
}

std::vector<Edge> build_internal_edges(const NodeTable& nodes) {
  std::vector<Edge> out;
  for (const Node& n : nodes.nodes) {
    if (n.level != Level::L3) continue;
    if (n.modality == Modality::object) {
      const int c = n.attrs.at("class_index").get<int>();
      if (c < 0 || c >= kDetectionClasses)
        fail(ErrorKind::registry_violation,
             "detection class " + std::to_string(c) + " outside 0..79");
      out.push_back({*n.parent, static_cast<EdgeCode>(c), n.id, 1.0});
    } else {
      const int k = n.attrs.at("ner_index").get<int>();
      if (k < 0 || k >= kNerClasses)
        fail(ErrorKind::registry_violation,
             "NER type " + std::to_string(k) + " outside 0..17");
      out.push_back({*n.parent, static_cast<EdgeCode>(codes::kFirstNer + k), n.id, 1.0});
    }
  }
  return out;
}

namespace {

// Node ids belonging to one news record.
struct FactNodes {
  const NewsRecord* record = nullptr;
  NodeIndex fact = 0;
  NodeIndex title = 0;
  NodeIndex content = 0;
  std::vector<NodeIndex> images;
  std::vector<std::optional<NodeIndex>> descriptions;
};

std::vector<FactNodes> fact_layout(const NodeTable& nodes,
                                   const std::vector<NewsRecord>& news) {
  std::map<FactId, FactNodes> by_id;
  for (const NewsRecord& r : news) {
    FactNodes& f = by_id[r.fact_id];
    f.record = &r;
    f.images.assign(r.image_paths.size(), 0);
    f.descriptions.assign(r.image_paths.size(), std::nullopt);
  }
  std::map<FactId, int> seen_fact;
  for (const Node& n : nodes.nodes) {
    if (n.origin.owner != OwnerKind::fact || n.level == Level::L3) continue;
    auto it = by_id.find(n.origin.id);
    if (it == by_id.end()) continue;
    FactNodes& f = it->second;
    if (n.level == Level::L1) {
      f.fact = n.id;
      ++seen_fact[n.origin.id];
      continue;
    }
    switch (n.origin.selector) {
      case Selector::title: f.title = n.id; break;
      case Selector::content: f.content = n.id; break;
      case Selector::image: f.images.at(n.origin.slot) = n.id; break;
      case Selector::image_desc: f.descriptions.at(n.origin.slot) = n.id; break;
      default: break;
    }
  }
  std::vector<FactNodes> out;
  for (auto& [id, f] : by_id) {
    if (!seen_fact.count(id))
      fail(ErrorKind::invalid_argument,
           "news record " + std::to_string(id) + " has no fact node");
    out.push_back(std::move(f));
  }
  return out;  // ordered by fact_id
}

Edge undirected(NodeIndex a, NodeIndex b, EdgeCode code, double weight = 1.0) {
  return a < b ? Edge{a, code, b, weight} : Edge{b, code, a, weight};
}

}  // namespace

std::vector<Edge> build_annotation_edges(const NodeTable& nodes,
                                         const std::vector<NewsRecord>& news) {
  using namespace codes;
  const std::vector<FactNodes> facts = fact_layout(nodes, news);
  std::vector<Edge> out;

  for (const FactNodes& f : facts) {
    out.push_back({f.fact, kFactTitle, f.title, 1.0});
    out.push_back({f.fact, kFactContent, f.content, 1.0});
    for (std::size_t k = 0; k < f.images.size(); ++k) {
      const NodeIndex img = f.images[k];
      out.push_back({f.fact, kFactImage, img, 1.0});
      if (f.descriptions[k]) out.push_back({img, kImageDescription, *f.descriptions[k], 1.0});
      out.push_back({img, kImageTitle, f.title, 1.0});
      out.push_back({img, kImageContent, f.content, 1.0});
    }
  }

  // same fine event
  std::map<std::string, std::vector<const FactNodes*>> by_event;
  for (const FactNodes& f : facts)
    if (!f.record->event_fine.empty()) by_event[f.record->event_fine].push_back(&f);
  for (const auto& [event, group] : by_event) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        const FactNodes& a = *group[i];
        const FactNodes& b = *group[j];
        out.push_back(undirected(a.fact, b.fact, kSameEventFact));
        out.push_back(undirected(a.title, b.title, kSameEventTitle));
        for (NodeIndex ia : a.images)
          for (NodeIndex ib : b.images) out.push_back(undirected(ia, ib, kSameEventImage));
        out.push_back({a.content, kSameEventContentTitle, b.title, 1.0});
        out.push_back({b.content, kSameEventContentTitle, a.title, 1.0});
      }
    }
  }

  // text continuity: consecutive contents in time within a coarse event
  std::map<std::string, std::vector<const FactNodes*>> by_coarse;
  for (const FactNodes& f : facts) by_coarse[f.record->event_coarse].push_back(&f);
  for (auto& [coarse, group] : by_coarse) {
    std::stable_sort(group.begin(), group.end(), [](auto* a, auto* b) {
      if (a->record->time != b->record->time) return a->record->time < b->record->time;
      return a->record->fact_id < b->record->fact_id;
    });
    for (std::size_t i = 0; i + 1 < group.size(); ++i)
      out.push_back({group[i]->content, kTextContinuity, group[i + 1]->content, 1.0});
  }
  return out;
}

namespace {

enum class SimRole { none, image, title, content };

SimRole sim_role(const Node& n) {
  if (n.level != Level::L2) return SimRole::none;
  switch (n.origin.selector) {
    case Selector::image:
    case Selector::pair_image: return SimRole::image;
    case Selector::title:
    case Selector::pair_text: return SimRole::title;
    case Selector::content: return SimRole::content;
    default: return SimRole::none;
  }
}

bool same_owner(const Node& a, const Node& b) {
  return a.origin.owner == b.origin.owner && a.origin.id == b.origin.id;
}

// Code for a pair of eligible nodes, or -1 if the pair is not compared.
int similarity_code(const Node& a, SimRole ra, const Node& b, SimRole rb) {
  using namespace codes;
  if (ra == SimRole::image && rb == SimRole::image)
    return same_owner(a, b) ? kImageSimilarity : kImageImageClip;
  if (same_owner(a, b)) return -1;
  if (ra == SimRole::title && rb == SimRole::title) return kTitleTitleClip;
  if (ra == SimRole::content && rb == SimRole::content) return kContentContentClip;
  if ((ra == SimRole::title && rb == SimRole::content) ||
      (ra == SimRole::content && rb == SimRole::title))
    return kTitleContentClip;
  return -1;
}

std::vector<Edge> apply_top_k(std::vector<Edge> edges, std::size_t num_nodes,
                              std::size_t k) {
  // per (node, code) ranking by weight desc, partner id asc
  std::vector<std::vector<std::uint32_t>> incident(num_nodes);
  for (std::uint32_t i = 0; i < edges.size(); ++i) {
    incident[edges[i].head].push_back(i);
    incident[edges[i].tail].push_back(i);
  }
  std::vector<bool> keep(edges.size(), false);
  for (NodeIndex v = 0; v < num_nodes; ++v) {
    auto& inc = incident[v];
    auto partner = [&](std::uint32_t i) {
      return edges[i].head == v ? edges[i].tail : edges[i].head;
    };
    std::stable_sort(inc.begin(), inc.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (edges[a].code != edges[b].code) return edges[a].code < edges[b].code;
      if (edges[a].weight != edges[b].weight) return edges[a].weight > edges[b].weight;
      return partner(a) < partner(b);
    });
    std::size_t taken = 0;
    for (std::size_t j = 0; j < inc.size(); ++j) {
      if (j > 0 && edges[inc[j]].code != edges[inc[j - 1]].code) taken = 0;
      if (taken < k) keep[inc[j]] = true;
      ++taken;
    }
  }
  std::vector<Edge> out;
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (keep[i]) out.push_back(edges[i]);
  return out;
}

}  // namespace

std::vector<Edge> build_similarity_edges(const NodeTable& nodes,
                                         const SimilarityOptions& options) {
  if (!(options.tau > 0.0) || options.tau > 1.0)
    fail(ErrorKind::invalid_argument, "tau must lie in (0, 1]");

  struct Eligible {
    NodeIndex id;
    SimRole role;
    std::int64_t row;
  };
  std::vector<Eligible> eligible;
  for (const Node& n : nodes.nodes) {
    const SimRole role = sim_role(n);
    if (role != SimRole::none && n.embedding_row >= 0)
      eligible.push_back({n.id, role, n.embedding_row});
  }
  // contiguous double rows so dot and squaredNorm reduce identically
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> emb =
      nodes.embeddings.cast<double>();

  std::vector<Edge> out;
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    const Eligible& a = eligible[i];
    const Node& na = nodes.nodes[a.id];
    for (std::size_t j = i + 1; j < eligible.size(); ++j) {
      const Eligible& b = eligible[j];
      const Node& nb = nodes.nodes[b.id];
      const int code = similarity_code(na, a.role, nb, b.role);
      if (code < 0) continue;
      const double c = cosine(emb.row(a.row), emb.row(b.row));
      if (c >= options.tau)
        out.push_back(undirected(a.id, b.id, static_cast<EdgeCode>(code),
                                 std::min(c, 1.0)));
    }
  }
  if (options.top_k > 0) out = apply_top_k(std::move(out), nodes.size(), options.top_k);
  return out;
}

Graph assemble_graph(NodeTable nodes, std::span<const std::vector<Edge>> edge_lists,
                     double tau, std::uint64_t seed, const EdgeRegistry& registry) {
  Graph g;
  const std::size_t n = nodes.size();
  for (const auto& list : edge_lists) {
    for (const Edge& e : list) {
      if (e.head >= n || e.tail >= n)
        fail(ErrorKind::dangling_edge, "edge " + std::to_string(e.head) + " -[" +
                                           std::to_string(e.code) + "]-> " +
                                           std::to_string(e.tail) +
                                           " references an unknown node");
      if (e.head == e.tail)
        fail(ErrorKind::dangling_edge,
             "self-loop on node " + std::to_string(e.head));
      registry.at(e.code);
      g.edges.push_back(e);
    }
  }
  std::stable_sort(g.edges.begin(), g.edges.end(), triple_less);
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end(),
                            [](const Edge& a, const Edge& b) { return a.same_triple(b); }),
                g.edges.end());
  g.nodes = std::move(nodes);
  g.tau = tau;
  g.build_seed = seed;
  g.registry = registry;

  char tau_text[32];
  std::snprintf(tau_text, sizeof tau_text, "%.17g", tau);
  g.provenance["tau"] = tau_text;
  g.provenance["seed"] = std::to_string(seed);
  g.provenance["num_nodes"] = std::to_string(g.num_nodes());
  g.provenance["num_triples"] = std::to_string(g.num_triples());
  return g;
}

Graph build_graph(const Corpus& corpus, const FeatureStore& features,
                  const BuildOptions& options) {
  validate_corpus(corpus.pairs, corpus.news);
  NodeTable nodes = assign_nodes(corpus, features, options.seed);
  std::vector<std::vector<Edge>> lists;
  lists.push_back(build_internal_edges(nodes));
  lists.push_back(build_annotation_edges(nodes, corpus.news));
  lists.push_back(build_similarity_edges(nodes, {options.tau, options.sim_top_k}));
  Graph g = assemble_graph(std::move(nodes), lists, options.tau, options.seed,
                           options.registry);
  g.provenance["sim_top_k"] = std::to_string(options.sim_top_k);
  g.provenance["embedding_dim"] = std::to_string(features.dim());
  return g;
}

std::map<View, std::size_t> view_counts(const Graph& graph) {
  std::map<View, std::size_t> out;
  for (View v : kViews) out[v] = 0;
  for (const Edge& e : graph.edges) ++out[graph.registry.at(e.code).view];
  return out;
}

}  // namespace uknow
