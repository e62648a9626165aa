#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "uknow/construct.hpp"
#include "uknow/plugin.hpp"

namespace uknow {

enum class Norm { L1, L2 };

std::string_view to_string(Norm norm);
Norm parse_norm(std::string_view text);

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EmbeddingTable {
  RowMatrixXd entities;   // |V| x d
  RowMatrixXd relations;  // 114 x d

  std::size_t dim() const { return static_cast<std::size_t>(entities.cols()); }
  std::size_t num_entities() const { return static_cast<std::size_t>(entities.rows()); }

  bool operator==(const EmbeddingTable& o) const {
    return entities.rows() == o.entities.rows() && entities.cols() == o.entities.cols() &&
           entities == o.entities && relations == o.relations;
  }
};

struct TrainConfig {
  std::size_t dim = 64;
  double margin = 1.0;
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  std::size_t negatives = 1;
  Norm norm = Norm::L1;
  std::uint64_t seed = 0;
  bool plugin = false;
  // Multiplies the learning rate of the plugin parameters. Full-rate steps
  // drive the conv bias negative early on and the whole network goes dead.
  double plugin_lr_scale = 0.1;
  PluginShape plugin_shape;  // dim is overwritten by `dim`

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Seeded uniform init in [-6/sqrt(d), 6/sqrt(d)]; entity rows are then scaled
// to unit L2 norm.
EmbeddingTable init_embeddings(std::size_t num_entities, const TrainConfig& cfg);

void normalize_entities(EmbeddingTable& table);

// ||h + r - t|| under the given norm.
template <typename H, typename R, typename T>
double translation_distance(const Eigen::MatrixBase<H>& h, const Eigen::MatrixBase<R>& r,
                            const Eigen::MatrixBase<T>& t, Norm norm) {
  const auto diff = (h + r - t).eval();
  return norm == Norm::L1 ? diff.template lpNorm<1>() : diff.norm();
}

// d distance / d (h + r - t); the L2 gradient at the origin is taken as 0.
Eigen::VectorXd translation_gradient(const Eigen::VectorXd& diff, Norm norm);

double transe_score(NodeIndex head, EdgeCode relation, NodeIndex tail,
                    const EmbeddingTable& table, Norm norm);

enum class Direction { tail, head };

// <head, relation, ?> (direction tail) or <?, relation, tail> (direction head);
// `anchor` is the known end.
struct TripleQuery {
  NodeIndex anchor = 0;
  EdgeCode relation = 0;
  Direction direction = Direction::tail;
};

// Scoring interface for link predictors; lower distance is better.
class LinkPredictor {
 public:
  virtual ~LinkPredictor() = default;
  virtual std::size_t num_entities() const = 0;
  // Fills out[c] with the distance of candidate c for the query.
  virtual void distances(const TripleQuery& query, std::span<double> out) const = 0;
};

// Neighbor sets N(e) sampled once per entity: distinct nodes linked to e in
// either direction, a seeded uniform sample of m when there are more than m,
// stored in ascending id order.
std::vector<std::vector<std::uint32_t>> sample_neighbors(std::size_t num_entities,
                                                         std::span<const Edge> edges,
                                                         std::size_t m, std::uint64_t seed);

// Enhanced representation e' of one entity.
Eigen::VectorXd neighbor_aggregate(NodeIndex entity,
                                   std::span<const std::uint32_t> neighbors,
                                   const EmbeddingTable& table,
                                   const PluginParams<double>& params);

struct Model {
  TrainConfig config;
  EmbeddingTable table;
  std::optional<PluginParams<double>> plugin;
  std::vector<std::vector<std::uint32_t>> neighbors;  // plugin only
  std::vector<double> loss_curve;                     // mean loss per epoch

  // Entity vectors used for scoring: raw vectors, or e' when the plugin is on.
  RowMatrixXd representations() const;

  bool operator==(const Model&) const = default;
};

// TransE (optionally with the plugin) as a LinkPredictor over precomputed
// representations.
class TransEPredictor : public LinkPredictor {
 public:
  explicit TransEPredictor(const Model& model);
  std::size_t num_entities() const override { return static_cast<std::size_t>(reps_.rows()); }
  void distances(const TripleQuery& query, std::span<double> out) const override;

 private:
  RowMatrixXd reps_;
  RowMatrixXd relations_;
  Norm norm_;
};

// Result of one margin-ranking update on a (positive, negative) pair.
struct StepResult {
  double loss = 0.0;
  bool updated = false;
};

// One SGD step of max(0, margin + d(pos) - d(neg)) on raw TransE vectors.
StepResult transe_sgd_step(EmbeddingTable& table, const Edge& positive, const Edge& negative,
                           double margin, double learning_rate, Norm norm);

// Minimizes the margin ranking loss over uniformly corrupted negatives
// (head or tail replaced, resampled while the corruption is a known positive).
Model train(std::size_t num_entities, std::span<const Edge> training, const TrainConfig& cfg);

// Known true answers per query, built from every known triple.
class FilterIndex {
 public:
  FilterIndex() = default;
  explicit FilterIndex(std::span<const Edge> known);
  void add(const Edge& e);
  // Sorted true answers for the query.
  std::span<const NodeIndex> answers(const TripleQuery& q) const;

 private:
  static std::uint64_t key(NodeIndex anchor, EdgeCode r) {
    return (static_cast<std::uint64_t>(anchor) << 16) | r;
  }
  std::unordered_map<std::uint64_t, std::vector<NodeIndex>> tails_;
  std::unordered_map<std::uint64_t, std::vector<NodeIndex>> heads_;
};

// Filtered, pessimistic rank of `answer` given per-candidate distances:
// 1 + #{c strictly closer} + #{c tied, c != answer}, ignoring candidates in
// `filtered` other than the answer itself.
std::size_t filtered_rank(std::span<const double> distances, NodeIndex answer,
                          std::span<const NodeIndex> filtered);

std::size_t rank_answer(const TripleQuery& query, NodeIndex answer, const LinkPredictor& model,
                        const FilterIndex& filter);

struct Metrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t n_queries = 0;
};

Metrics metrics_from_ranks(std::span<const std::size_t> ranks);

// Head and tail prediction for every test triple.
Metrics evaluate(const LinkPredictor& model, std::span<const Edge> test,
                 const FilterIndex& filter);

void save_model(const Model& model, const std::filesystem::path& dir);
Model load_model(const std::filesystem::path& dir);

}  // namespace uknow
