#include "uknow/knowledge_scoring.hpp"

#include <algorithm>
#include <numeric>

#include "uknow/features.hpp"

namespace uknow {

GraphFeatureSource::GraphFeatureSource(const NodeTable& nodes) : nodes_(&nodes) {}

std::size_t GraphFeatureSource::dim() const {
  return static_cast<std::size_t>(nodes_->embeddings.cols());
}

Eigen::VectorXd GraphFeatureSource::vector(NodeIndex id) const {
  if (id >= nodes_->size())
    fail(ErrorKind::invalid_argument, "node " + std::to_string(id) + " is not in the graph");
  return nodes_->embedding(id);
}

TableSource::TableSource(RowMatrixXd rows) : rows_(std::move(rows)) {}

Eigen::VectorXd TableSource::vector(NodeIndex id) const {
  if (id >= rows_.rows())
    fail(ErrorKind::invalid_argument, "node " + std::to_string(id) + " is not in the table");
  return rows_.row(id).transpose();
}

std::array<std::vector<NodeIndex>, 4> zk_neighbors(NodeIndex image_node, NodeIndex text_node,
                                                   const Graph& graph) {
  auto check = [&](NodeIndex id, Modality want, const char* what) {
    if (id >= graph.num_nodes())
      fail(ErrorKind::invalid_argument, "node " + std::to_string(id) + " is not in the graph");
    if (graph.nodes.at(id).modality != want)
      fail(ErrorKind::invalid_argument,
           "node " + std::to_string(id) + " is not " + what + " node");
  };
  check(image_node, Modality::image, "an image");
  check(text_node, Modality::text, "a text");

  std::array<std::vector<NodeIndex>, 4> out;
  for (const Edge& e : graph.edges) {
    const bool at_image = e.head == image_node || e.tail == image_node;
    const bool at_text = e.head == text_node || e.tail == text_node;
    if (!at_image && !at_text) continue;
    const View view = graph.registry.at(e.code).view;
    auto consider = [&](NodeIndex self, ZkBlock block, bool ok) {
      if (!ok) return;
      const NodeIndex other = e.head == self ? e.tail : e.head;
      out[static_cast<std::size_t>(block)].push_back(other);
    };
    if (at_image) {
      const NodeIndex other = e.head == image_node ? e.tail : e.head;
      const Modality m = graph.nodes.at(other).modality;
      consider(image_node, ZkBlock::I_in, view == View::I_in && m == Modality::object);
      consider(image_node, ZkBlock::I_cross,
               (view == View::I_cross || e.code == codes::kImageSimilarity) &&
                   m == Modality::image);
    }
    if (at_text) {
      const NodeIndex other = e.head == text_node ? e.tail : e.head;
      const Modality m = graph.nodes.at(other).modality;
      consider(text_node, ZkBlock::T_in, view == View::T_in && m == Modality::entity);
      consider(text_node, ZkBlock::T_cross, view == View::T_cross && m == Modality::text);
    }
  }
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

KnowledgeEmbedding build_zk(NodeIndex image_node, NodeIndex text_node, const Graph& graph,
                            const EmbeddingSource& source) {
  const auto d = static_cast<Eigen::Index>(source.dim());
  if (d == 0) fail(ErrorKind::invalid_argument, "embedding source has no vectors");
  const auto neighbors = zk_neighbors(image_node, text_node, graph);
  KnowledgeEmbedding zk;
  zk.concat.resize(4 * d);
  zk.projected = Eigen::VectorXd::Zero(d);
  for (std::size_t b = 0; b < 4; ++b) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    std::size_t n = 0;
    for (NodeIndex id : neighbors[b]) {
      const Eigen::VectorXd v = source.vector(id);
      if (v.size() == 0) continue;
      if (v.size() != d) fail(ErrorKind::schema, "embedding source dim mismatch");
      sum += v;
      ++n;
    }
    zk.blocks[b] = n ? Eigen::VectorXd(sum / static_cast<double>(n)) : sum;
    zk.pooled[b] = n;
    zk.concat.segment(static_cast<Eigen::Index>(b) * d, d) = zk.blocks[b];
    zk.projected += zk.blocks[b];
  }
  zk.projected /= 4.0;
  return zk;
}

TikScore score_tik(const Eigen::VectorXd& zT, const Eigen::VectorXd& zI,
                   const Eigen::VectorXd& zk_projected) {
  TikScore s;
  s.terms[0] = cosine(zT, zI);
  if (zk_projected.size() != zT.size())
    fail(ErrorKind::invalid_argument, "knowledge vector length mismatch");
  if (zk_projected.squaredNorm() > 0.0) {
    s.terms[1] = cosine(zk_projected, zI);
    s.terms[2] = cosine(zk_projected, zT);
  }
  s.total = s.terms[0] + s.terms[1] + s.terms[2];
  return s;
}

TikScore score_tik(const Eigen::VectorXd& zT, const Eigen::VectorXd& zI,
                   const KnowledgeEmbedding& zk) {
  return score_tik(zT, zI, zk.projected);
}

std::string_view to_string(RetrievalMode mode) {
  switch (mode) {
    case RetrievalMode::img2img: return "img2img";
    case RetrievalMode::txt2txt: return "txt2txt";
    case RetrievalMode::img2txt: return "img2txt";
    case RetrievalMode::txt2img: return "txt2img";
  }
  return "?";
}

RetrievalMode parse_retrieval_mode(std::string_view text) {
  for (auto m : {RetrievalMode::img2img, RetrievalMode::txt2txt, RetrievalMode::img2txt,
                 RetrievalMode::txt2img})
    if (to_string(m) == text) return m;
  fail(ErrorKind::invalid_argument,
       "retrieval mode must be img2img, txt2txt, img2txt or txt2img");
}

RecallResult recall_at_k(const RowMatrixXd& queries, std::span<const std::string> query_labels,
                         const RowMatrixXd& gallery,
                         std::span<const std::string> gallery_labels, std::size_t k,
                         bool same_set) {
  if (k < 1) fail(ErrorKind::invalid_argument, "K must be >= 1");
  if (query_labels.size() != static_cast<std::size_t>(queries.rows()) ||
      gallery_labels.size() != static_cast<std::size_t>(gallery.rows()))
    fail(ErrorKind::invalid_argument, "labels do not cover every item");
  if (same_set && queries.rows() != gallery.rows())
    fail(ErrorKind::invalid_argument, "same-set retrieval needs queries == gallery");

  RecallResult r;
  std::vector<std::pair<double, std::size_t>> ranked;
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const std::string& label = query_labels[static_cast<std::size_t>(q)];
    if (label.empty()) continue;
    bool has_mate = false;
    for (std::size_t g = 0; g < gallery_labels.size() && !has_mate; ++g)
      has_mate = gallery_labels[g] == label && !(same_set && g == static_cast<std::size_t>(q));
    if (!has_mate) continue;
    ++r.eligible;

    ranked.clear();
    for (Eigen::Index g = 0; g < gallery.rows(); ++g) {
      if (same_set && g == q) continue;
      ranked.emplace_back(cosine(queries.row(q), gallery.row(g)), static_cast<std::size_t>(g));
    }
    const std::size_t top = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top),
                      ranked.end(), [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    for (std::size_t i = 0; i < top; ++i)
      if (gallery_labels[ranked[i].second] == label) {
        ++r.hits;
        break;
      }
  }
  if (r.eligible) r.recall = static_cast<double>(r.hits) / static_cast<double>(r.eligible);
  return r;
}

RetrievalItems retrieval_items(const Graph& graph, Modality modality,
                               const EmbeddingSource& source) {
  RetrievalItems items;
  std::vector<Eigen::VectorXd> rows;
  for (const Node& n : graph.nodes.nodes) {
    if (n.modality != modality || !n.parent) continue;
    const std::string_view kind = n.kind();
    if (kind != "image" && kind != "title") continue;
    Eigen::VectorXd v = source.vector(n.id);
    if (v.size() == 0) continue;
    const Node& fact = graph.nodes.at(*n.parent);
    items.ids.push_back(n.id);
    items.labels.push_back(fact.attrs.value("event_fine", std::string()));
    rows.push_back(std::move(v));
  }
  items.vectors.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(source.dim()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    items.vectors.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return items;
}

RecallResult retrieval_eval(const Graph& graph, RetrievalMode mode, std::size_t k,
                            const EmbeddingSource& source) {
  const bool query_image = mode == RetrievalMode::img2img || mode == RetrievalMode::img2txt;
  const bool gallery_image = mode == RetrievalMode::img2img || mode == RetrievalMode::txt2img;
  const RetrievalItems q =
      retrieval_items(graph, query_image ? Modality::image : Modality::text, source);
  if (query_image == gallery_image)
    return recall_at_k(q.vectors, q.labels, q.vectors, q.labels, k, true);
  const RetrievalItems g =
      retrieval_items(graph, gallery_image ? Modality::image : Modality::text, source);
  return recall_at_k(q.vectors, q.labels, g.vectors, g.labels, k, false);
}

double accuracy_at_k(const Eigen::MatrixXd& scores, std::span<const int> labels, std::size_t k) {
  if (k < 1) fail(ErrorKind::invalid_argument, "K must be >= 1");
  if (labels.size() != static_cast<std::size_t>(scores.rows()))
    fail(ErrorKind::invalid_argument, "one label per score row is required");
  if (labels.empty()) fail(ErrorKind::invalid_argument, "no rows to classify");
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= scores.cols())
      fail(ErrorKind::invalid_argument,
           "label " + std::to_string(y) + " outside [0, " + std::to_string(scores.cols()) + ")");
    std::size_t rank = 1;
    for (Eigen::Index c = 0; c < scores.cols(); ++c)
      if (c != y && scores(i, c) >= scores(i, y)) ++rank;
    correct += rank <= k;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

}  // namespace uknow
