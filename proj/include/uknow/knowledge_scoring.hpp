#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uknow/construct.hpp"
#include "uknow/reasoning.hpp"

namespace uknow {

// Per-node vectors for z^k pooling.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual std::size_t dim() const = 0;
  // Empty vector when the node has no vector in this source.
  virtual Eigen::VectorXd vector(NodeIndex id) const = 0;
};

// Feature vectors stored in the graph's node table.
class GraphFeatureSource : public EmbeddingSource {
 public:
  explicit GraphFeatureSource(const NodeTable& nodes);
  std::size_t dim() const override;
  Eigen::VectorXd vector(NodeIndex id) const override;

 private:
  const NodeTable* nodes_;
};

// Rows of a trained entity table (every node has a vector).
class TableSource : public EmbeddingSource {
 public:
  explicit TableSource(RowMatrixXd rows);
  std::size_t dim() const override { return static_cast<std::size_t>(rows_.cols()); }
  Eigen::VectorXd vector(NodeIndex id) const override;

 private:
  RowMatrixXd rows_;
};

enum class ZkBlock { I_in, T_in, I_cross, T_cross };

struct KnowledgeEmbedding {
  std::array<Eigen::VectorXd, 4> blocks;  // I_in, T_in, I_cross, T_cross
  std::array<std::size_t, 4> pooled{};    // nodes averaged into each block
  Eigen::VectorXd concat;                 // 4d
  Eigen::VectorXd projected;              // d, mean of the blocks
};

// Neighbor sets pooled into each block:
//   I_in    L3 object neighbors of the image node
//   T_in    L3 entity neighbors of the text node
//   I_cross L2 image neighbors of the image node over codes 105 and I_cross
//   T_cross L2 text neighbors of the text node over T_cross codes
// Each distinct neighbor with a vector counts once.
std::array<std::vector<NodeIndex>, 4> zk_neighbors(NodeIndex image_node, NodeIndex text_node,
                                                   const Graph& graph);

KnowledgeEmbedding build_zk(NodeIndex image_node, NodeIndex text_node, const Graph& graph,
                            const EmbeddingSource& source);

struct TikScore {
  std::array<double, 3> terms{};  // cos(zT, zI), cos(zk', zI), cos(zk', zT)
  double total = 0.0;
};

TikScore score_tik(const Eigen::VectorXd& zT, const Eigen::VectorXd& zI,
                   const KnowledgeEmbedding& zk);

// Knowledge terms computed against a bare projected vector.
TikScore score_tik(const Eigen::VectorXd& zT, const Eigen::VectorXd& zI,
                   const Eigen::VectorXd& zk_projected);

enum class RetrievalMode { img2img, txt2txt, img2txt, txt2img };

std::string_view to_string(RetrievalMode mode);
RetrievalMode parse_retrieval_mode(std::string_view text);

struct RecallResult {
  std::optional<double> recall;  // absent when no query is eligible
  std::size_t eligible = 0;
  std::size_t hits = 0;
};

// R@K of queries against a gallery by cosine. When `same_set` is true the
// queries are the gallery and each query skips itself. A query is eligible
// when its label is nonempty and some other gallery item carries it. Equal
// cosines are ordered by gallery index.
RecallResult recall_at_k(const RowMatrixXd& queries, std::span<const std::string> query_labels,
                         const RowMatrixXd& gallery,
                         std::span<const std::string> gallery_labels, std::size_t k,
                         bool same_set);

// Items for retrieval on a graph: image nodes and title nodes of news facts
// with feature vectors, labeled by the fine event of their fact.
struct RetrievalItems {
  std::vector<NodeIndex> ids;
  std::vector<std::string> labels;
  RowMatrixXd vectors;
};

RetrievalItems retrieval_items(const Graph& graph, Modality modality,
                               const EmbeddingSource& source);

RecallResult retrieval_eval(const Graph& graph, RetrievalMode mode, std::size_t k,
                            const EmbeddingSource& source);

// Fraction of rows whose true class is within the k best scores; a class
// tied with the true one counts as ranked ahead of it.
double accuracy_at_k(const Eigen::MatrixXd& scores, std::span<const int> labels, std::size_t k);

}  // namespace uknow
