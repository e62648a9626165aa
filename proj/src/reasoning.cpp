#include "uknow/reasoning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "json.hpp"
#include "uknow/digest.hpp"
#include "uknow/rng.hpp"
#include "uknow/tensor_io.hpp"

namespace uknow {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitSalt = 0x696e6974ULL;       // "init"
constexpr std::uint64_t kPluginSalt = 0x706c7567ULL;     // "plug"
constexpr std::uint64_t kNeighborSalt = 0x6e656967ULL;   // "neig"
constexpr std::string_view kModelMagic = "UKNOWF64";

struct TripleHash {
  std::size_t operator()(const std::tuple<NodeIndex, EdgeCode, NodeIndex>& t) const {
    std::uint64_t h = (static_cast<std::uint64_t>(std::get<0>(t)) << 32) | std::get<2>(t);
    h ^= static_cast<std::uint64_t>(std::get<1>(t)) * 0x9e3779b97f4a7c15ULL;
    h ^= h >> 29;
    return static_cast<std::size_t>(h * 0xbf58476d1ce4e5b9ULL);
  }
};

using TripleSet = std::unordered_set<std::tuple<NodeIndex, EdgeCode, NodeIndex>, TripleHash>;

void check_entity(NodeIndex id, std::size_t n) {
  if (id >= n)
    fail(ErrorKind::invalid_argument,
         "entity " + std::to_string(id) + " outside [0, " + std::to_string(n) + ")");
}

void check_relation(int code) {
  if (code < 0 || code >= kEdgeCodes)
    fail(ErrorKind::invalid_argument, "relation code " + std::to_string(code) +
                                          " outside 0..113");
}

}  // namespace

std::string_view to_string(Norm norm) { return norm == Norm::L1 ? "L1" : "L2"; }

Norm parse_norm(std::string_view text) {
  if (text == "L1" || text == "l1") return Norm::L1;
  if (text == "L2" || text == "l2") return Norm::L2;
  fail(ErrorKind::invalid_argument, "norm must be L1 or L2");
}

void TrainConfig::validate() const {
  if (dim == 0) fail(ErrorKind::invalid_argument, "embedding dim must be positive");
  if (!(margin >= 0.0)) fail(ErrorKind::invalid_argument, "margin must be >= 0");
  if (!(learning_rate > 0.0)) fail(ErrorKind::invalid_argument, "learning rate must be > 0");
  if (negatives == 0) fail(ErrorKind::invalid_argument, "need at least one negative");
  if (plugin) {
    if (!(plugin_lr_scale > 0.0))
      fail(ErrorKind::invalid_argument, "plugin learning-rate scale must be > 0");
    PluginShape s = plugin_shape;
    s.dim = dim;
    s.validate();
  }
}

EmbeddingTable init_embeddings(std::size_t num_entities, const TrainConfig& cfg) {
  if (cfg.dim == 0) fail(ErrorKind::invalid_argument, "embedding dim must be positive");
  Rng rng(cfg.seed ^ kInitSalt);
  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  EmbeddingTable t;
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  t.entities.resize(static_cast<Eigen::Index>(num_entities), d);
  t.relations.resize(kEdgeCodes, d);
  for (Eigen::Index i = 0; i < t.entities.size(); ++i)
    t.entities.data()[i] = rng.uniform(-bound, bound);
  for (Eigen::Index i = 0; i < t.relations.size(); ++i)
    t.relations.data()[i] = rng.uniform(-bound, bound);
  normalize_entities(t);
  return t;
}

void normalize_entities(EmbeddingTable& table) {
  for (Eigen::Index i = 0; i < table.entities.rows(); ++i) {
    const double n = table.entities.row(i).norm();
    if (n > 0.0) table.entities.row(i) /= n;
  }
}

Eigen::VectorXd translation_gradient(const Eigen::VectorXd& diff, Norm norm) {
  if (norm == Norm::L1)
    return diff.unaryExpr([](double x) { return double((x > 0.0) - (x < 0.0)); });
  const double n = diff.norm();
  if (n == 0.0) return Eigen::VectorXd::Zero(diff.size());
  return diff / n;
}

double transe_score(NodeIndex head, EdgeCode relation, NodeIndex tail,
                    const EmbeddingTable& table, Norm norm) {
  check_entity(head, table.num_entities());
  check_entity(tail, table.num_entities());
  check_relation(relation);
  return translation_distance(table.entities.row(head), table.relations.row(relation),
                              table.entities.row(tail), norm);
}

std::vector<std::vector<std::uint32_t>> sample_neighbors(std::size_t num_entities,
                                                         std::span<const Edge> edges,
                                                         std::size_t m, std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> all(num_entities);
  for (const Edge& e : edges) {
    check_entity(e.head, num_entities);
    check_entity(e.tail, num_entities);
    if (e.head == e.tail) continue;
    all[e.head].push_back(e.tail);
    all[e.tail].push_back(e.head);
  }
  Rng rng(seed ^ kNeighborSalt);
  for (auto& list : all) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    if (list.size() > m) {
      // partial Fisher-Yates: the first m slots are a uniform sample
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(list.size() - i));
        std::swap(list[i], list[j]);
      }
      list.resize(m);
      std::sort(list.begin(), list.end());
    }
  }
  return all;
}

Eigen::VectorXd neighbor_aggregate(NodeIndex entity,
                                   std::span<const std::uint32_t> neighbors,
                                   const EmbeddingTable& table,
                                   const PluginParams<double>& params) {
  check_entity(entity, table.num_entities());
  if (params.shape.dim != table.dim())
    fail(ErrorKind::invalid_argument, "plugin dim does not match the embedding table");
  for (auto n : neighbors) check_entity(n, table.num_entities());
  const Eigen::MatrixXd x =
      stack_neighborhood<double>(table.entities, entity, neighbors, params.shape);
  return plugin_apply(params, x);
}

RowMatrixXd Model::representations() const {
  if (!plugin) return table.entities;
  RowMatrixXd reps(table.entities.rows(), table.entities.cols());
  for (Eigen::Index e = 0; e < reps.rows(); ++e)
    reps.row(e) = neighbor_aggregate(static_cast<NodeIndex>(e),
                                     neighbors[static_cast<std::size_t>(e)], table, *plugin)
                      .transpose();
  return reps;
}

TransEPredictor::TransEPredictor(const Model& model)
    : reps_(model.representations()),
      relations_(model.table.relations),
      norm_(model.config.norm) {}

void TransEPredictor::distances(const TripleQuery& q, std::span<double> out) const {
  check_entity(q.anchor, num_entities());
  check_relation(q.relation);
  if (out.size() != num_entities())
    fail(ErrorKind::invalid_argument, "distance buffer has the wrong size");
  // tail query: |a + r - c|; head query: |c + r - a| = |c - (a - r)|
  const Eigen::RowVectorXd target =
      q.direction == Direction::tail ? Eigen::RowVectorXd(reps_.row(q.anchor) + relations_.row(q.relation))
                                     : Eigen::RowVectorXd(reps_.row(q.anchor) - relations_.row(q.relation));
  for (Eigen::Index c = 0; c < reps_.rows(); ++c) {
    const auto diff = (target - reps_.row(c)).eval();
    out[static_cast<std::size_t>(c)] = norm_ == Norm::L1 ? diff.lpNorm<1>() : diff.norm();
  }
}

StepResult transe_sgd_step(EmbeddingTable& table, const Edge& pos, const Edge& neg,
                           double margin, double lr, Norm norm) {
  const Eigen::VectorXd dp = (table.entities.row(pos.head) + table.relations.row(pos.code) -
                              table.entities.row(pos.tail))
                                 .transpose();
  const Eigen::VectorXd dn = (table.entities.row(neg.head) + table.relations.row(neg.code) -
                              table.entities.row(neg.tail))
                                 .transpose();
  const double d_pos = norm == Norm::L1 ? dp.lpNorm<1>() : dp.norm();
  const double d_neg = norm == Norm::L1 ? dn.lpNorm<1>() : dn.norm();
  const double loss = std::max(0.0, margin + d_pos - d_neg);
  if (!(loss > 0.0)) return {loss, false};

  const Eigen::RowVectorXd gp = translation_gradient(dp, norm).transpose();
  const Eigen::RowVectorXd gn = translation_gradient(dn, norm).transpose();
  table.entities.row(pos.head) -= lr * gp;
  table.entities.row(pos.tail) += lr * gp;
  table.relations.row(pos.code) -= lr * gp;
  table.entities.row(neg.head) += lr * gn;
  table.entities.row(neg.tail) -= lr * gn;
  table.relations.row(neg.code) += lr * gn;
  return {loss, true};
}

namespace {

// One margin step through the plugin. Gradients are accumulated first and
// applied afterwards so every entity sees the pre-step parameters.
StepResult plugin_sgd_step(Model& model, const Edge& pos, const Edge& neg, double margin,
                           double lr, PluginParams<double>& grad) {
  const PluginParams<double>& params = *model.plugin;
  const Norm norm = model.config.norm;

  struct Cached {
    NodeIndex id;
    PluginTrace<double> trace;
    Eigen::VectorXd upstream;
  };
  std::vector<Cached> cache;
  auto rep = [&](NodeIndex id) -> Cached& {
    for (auto& c : cache)
      if (c.id == id) return c;
    Cached c{id, {}, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.shape.dim))};
    plugin_forward(params,
                   stack_neighborhood<double>(model.table.entities, id, model.neighbors[id],
                                              params.shape),
                   c.trace);
    cache.push_back(std::move(c));
    return cache.back();
  };
  rep(pos.head);
  rep(pos.tail);
  rep(neg.head);
  rep(neg.tail);
  auto out = [&](NodeIndex id) -> const Eigen::VectorXd& { return rep(id).trace.output; };

  const Eigen::VectorXd dp =
      out(pos.head) + model.table.relations.row(pos.code).transpose() - out(pos.tail);
  const Eigen::VectorXd dn =
      out(neg.head) + model.table.relations.row(neg.code).transpose() - out(neg.tail);
  const double d_pos = norm == Norm::L1 ? dp.lpNorm<1>() : dp.norm();
  const double d_neg = norm == Norm::L1 ? dn.lpNorm<1>() : dn.norm();
  const double loss = std::max(0.0, margin + d_pos - d_neg);
  if (!(loss > 0.0)) return {loss, false};

  const Eigen::VectorXd gp = translation_gradient(dp, norm);
  const Eigen::VectorXd gn = translation_gradient(dn, norm);
  rep(pos.head).upstream += gp;
  rep(pos.tail).upstream -= gp;
  rep(neg.head).upstream -= gn;
  rep(neg.tail).upstream += gn;

  grad.set_zero();
  std::vector<std::pair<NodeIndex, Eigen::RowVectorXd>> entity_grads;
  auto add_entity_grad = [&](NodeIndex id, const Eigen::RowVectorXd& g) {
    for (auto& [e, acc] : entity_grads)
      if (e == id) {
        acc += g;
        return;
      }
    entity_grads.emplace_back(id, g);
  };
  for (const Cached& c : cache) {
    const Eigen::MatrixXd d_input = plugin_backward(params, c.trace, c.upstream, grad);
    add_entity_grad(c.id, d_input.row(0));
    const auto& nb = model.neighbors[c.id];
    const std::size_t take = std::min(nb.size(), params.shape.neighbors);
    for (std::size_t i = 0; i < take; ++i)
      add_entity_grad(nb[i], d_input.row(static_cast<Eigen::Index>(i + 1)));
  }

  model.plugin->axpy(-lr * model.config.plugin_lr_scale, grad);
  for (const auto& [e, g] : entity_grads) model.table.entities.row(e) -= lr * g;
  model.table.relations.row(pos.code) -= lr * gp.transpose();
  model.table.relations.row(neg.code) += lr * gn.transpose();
  return {loss, true};
}

}  // namespace

Model train(std::size_t num_entities, std::span<const Edge> training, const TrainConfig& cfg) {
  cfg.validate();
  if (training.empty()) fail(ErrorKind::invalid_argument, "no training triples");
  if (num_entities < 2) fail(ErrorKind::invalid_argument, "need at least two entities");
  TripleSet known;
  for (const Edge& e : training) {
    check_entity(e.head, num_entities);
    check_entity(e.tail, num_entities);
    check_relation(e.code);
    known.insert({e.head, e.code, e.tail});
  }

  Model model;
  model.config = cfg;
  model.config.plugin_shape.dim = cfg.dim;
  model.table = init_embeddings(num_entities, cfg);
  PluginParams<double> grad;
  if (cfg.plugin) {
    Rng prng(cfg.seed ^ kPluginSalt);
    model.plugin = PluginParams<double>::random(model.config.plugin_shape, prng);
    model.neighbors =
        sample_neighbors(num_entities, training, model.config.plugin_shape.neighbors, cfg.seed);
    grad = PluginParams<double>::zeros(model.config.plugin_shape);
  }

  Rng rng(cfg.seed);
  std::vector<std::uint32_t> order(training.size());
  std::iota(order.begin(), order.end(), 0u);

  auto corrupt = [&](const Edge& pos) -> std::optional<Edge> {
    const bool replace_head = rng.below(2) == 0;
    for (int attempt = 0; attempt < 64; ++attempt) {
      const auto c = static_cast<NodeIndex>(rng.below(num_entities));
      Edge neg = pos;
      (replace_head ? neg.head : neg.tail) = c;
      if (neg.head == neg.tail && pos.head != pos.tail) continue;
      if (!known.count({neg.head, neg.code, neg.tail})) return neg;
    }
    return std::nullopt;
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span<std::uint32_t>(order), rng);
    double total = 0.0;
    std::size_t steps = 0;
    for (std::uint32_t idx : order) {
      const Edge& pos = training[idx];
      for (std::size_t k = 0; k < cfg.negatives; ++k) {
        const auto neg = corrupt(pos);
        if (!neg) continue;
        const StepResult r =
            cfg.plugin ? plugin_sgd_step(model, pos, *neg, cfg.margin, cfg.learning_rate, grad)
                       : transe_sgd_step(model.table, pos, *neg, cfg.margin,
                                         cfg.learning_rate, cfg.norm);
        total += r.loss;
        ++steps;
      }
    }
    const double mean = steps ? total / static_cast<double>(steps) : 0.0;
    if (!std::isfinite(mean) || !model.table.entities.allFinite() ||
        (model.plugin && !model.plugin->all_finite()))
      fail(ErrorKind::divergence, "training diverged at epoch " + std::to_string(epoch));
    normalize_entities(model.table);
    model.loss_curve.push_back(mean);
  }
  return model;
}

FilterIndex::FilterIndex(std::span<const Edge> known) {
  for (const Edge& e : known) add(e);
  for (auto* m : {&tails_, &heads_})
    for (auto& [k, v] : *m) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
}

void FilterIndex::add(const Edge& e) {
  auto insert_sorted = [](std::vector<NodeIndex>& v, NodeIndex x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  insert_sorted(tails_[key(e.head, e.code)], e.tail);
  insert_sorted(heads_[key(e.tail, e.code)], e.head);
}

std::span<const NodeIndex> FilterIndex::answers(const TripleQuery& q) const {
  const auto& m = q.direction == Direction::tail ? tails_ : heads_;
  auto it = m.find(key(q.anchor, q.relation));
  if (it == m.end()) return {};
  return it->second;
}

std::size_t filtered_rank(std::span<const double> distances, NodeIndex answer,
                          std::span<const NodeIndex> filtered) {
  if (answer >= distances.size())
    fail(ErrorKind::invalid_argument, "answer " + std::to_string(answer) + " is not an entity");
  const double s = distances[answer];
  std::size_t rank = 1;
  for (std::size_t c = 0; c < distances.size(); ++c) {
    if (c == answer) continue;
    if (std::binary_search(filtered.begin(), filtered.end(), static_cast<NodeIndex>(c)))
      continue;
    if (distances[c] <= s) ++rank;
  }
  return rank;
}

std::size_t rank_answer(const TripleQuery& query, NodeIndex answer, const LinkPredictor& model,
                        const FilterIndex& filter) {
  if (answer >= model.num_entities())
    fail(ErrorKind::invalid_argument, "answer " + std::to_string(answer) + " is not an entity");
  std::vector<double> d(model.num_entities());
  model.distances(query, d);
  return filtered_rank(d, answer, filter.answers(query));
}

Metrics metrics_from_ranks(std::span<const std::size_t> ranks) {
  if (ranks.empty()) fail(ErrorKind::invalid_argument, "no ranks to aggregate");
  Metrics m;
  for (std::size_t r : ranks) {
    if (r == 0) fail(ErrorKind::invalid_argument, "ranks start at 1");
    m.mrr += 1.0 / static_cast<double>(r);
    m.hits1 += r <= 1;
    m.hits3 += r <= 3;
    m.hits10 += r <= 10;
  }
  const double n = static_cast<double>(ranks.size());
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  m.n_queries = ranks.size();
  return m;
}

Metrics evaluate(const LinkPredictor& model, std::span<const Edge> test,
                 const FilterIndex& filter) {
  if (test.empty()) fail(ErrorKind::invalid_argument, "empty test set");
  std::vector<std::size_t> ranks;
  ranks.reserve(2 * test.size());
  std::vector<double> d(model.num_entities());
  for (const Edge& e : test) {
    const TripleQuery tail_q{e.head, e.code, Direction::tail};
    model.distances(tail_q, d);
    ranks.push_back(filtered_rank(d, e.tail, filter.answers(tail_q)));
    const TripleQuery head_q{e.tail, e.code, Direction::head};
    model.distances(head_q, d);
    ranks.push_back(filtered_rank(d, e.head, filter.answers(head_q)));
  }
  return metrics_from_ranks(ranks);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json config_to_json(const TrainConfig& c) {
  return {{"dim", c.dim},
          {"margin", c.margin},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"negatives", c.negatives},
          {"norm", to_string(c.norm)},
          {"seed", c.seed},
          {"plugin", c.plugin},
          {"plugin_lr_scale", c.plugin_lr_scale},
          {"plugin_shape",
           {{"dim", c.plugin_shape.dim},
            {"neighbors", c.plugin_shape.neighbors},
            {"kernel_rows", c.plugin_shape.kernel_rows},
            {"kernel_cols", c.plugin_shape.kernel_cols},
            {"channels", c.plugin_shape.channels},
            {"hidden", c.plugin_shape.hidden}}}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.dim = j.at("dim").get<std::size_t>();
  c.margin = j.at("margin").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.negatives = j.at("negatives").get<std::size_t>();
  c.norm = parse_norm(j.at("norm").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.plugin = j.at("plugin").get<bool>();
  c.plugin_lr_scale = j.at("plugin_lr_scale").get<double>();
  const json& s = j.at("plugin_shape");
  c.plugin_shape.dim = s.at("dim").get<std::size_t>();
  c.plugin_shape.neighbors = s.at("neighbors").get<std::size_t>();
  c.plugin_shape.kernel_rows = s.at("kernel_rows").get<std::size_t>();
  c.plugin_shape.kernel_cols = s.at("kernel_cols").get<std::size_t>();
  c.plugin_shape.channels = s.at("channels").get<std::size_t>();
  c.plugin_shape.hidden = s.at("hidden").get<std::size_t>();
  return c;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string entities = encode_tensor(model.table.entities, kModelMagic);
  const std::string relations = encode_tensor(model.table.relations, kModelMagic);
  json meta;
  meta["format"] = "uknow-model";
  meta["version"] = 1;
  meta["model"] = "transe";
  meta["config"] = config_to_json(model.config);
  meta["num_entities"] = model.table.num_entities();
  meta["loss_curve"] = model.loss_curve;
  meta["checksums"] = {{"entities.bin", sha256_hex(entities)},
                       {"relations.bin", sha256_hex(relations)}};
  write_file_atomic(dir / "entities.bin", entities);
  write_file_atomic(dir / "relations.bin", relations);
  if (model.plugin) {
    PluginParams<double> p = *model.plugin;
    std::vector<double> flat;
    p.for_each_block([&](std::span<double> b) { flat.insert(flat.end(), b.begin(), b.end()); });
    const std::string blob = encode_tensor(
        Eigen::Map<const Eigen::RowVectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())),
        kModelMagic);
    meta["checksums"]["plugin.bin"] = sha256_hex(blob);
    meta["neighbors"] = model.neighbors;
    write_file_atomic(dir / "plugin.bin", blob);
  }
  write_file_atomic(dir / "model.json", meta.dump(2) + "\n");
}

Model load_model(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "model.json"))
    fail(ErrorKind::missing_manifest, "no model.json in " + dir.string());
  Model m;
  try {
    const json meta = json::parse(read_file(dir / "model.json"));
    if (meta.at("format") != "uknow-model" || meta.at("version") != 1)
      fail(ErrorKind::corrupt_store, "not a version-1 model directory");
    m.config = config_from_json(meta.at("config"));
    m.loss_curve = meta.at("loss_curve").get<std::vector<double>>();
    auto blob = [&](const char* name) {
      const std::string bytes = read_file(dir / name);
      if (sha256_hex(bytes) != meta.at("checksums").at(name).get<std::string>())
        fail(ErrorKind::corrupt_store, std::string("checksum mismatch on ") + name);
      return decode_tensor<double>(bytes, kModelMagic);
    };
    m.table.entities = blob("entities.bin");
    m.table.relations = blob("relations.bin");
    if (m.config.plugin) {
      const RowMatrixXd flat = blob("plugin.bin");
      PluginParams<double> p = PluginParams<double>::zeros(m.config.plugin_shape);
      if (static_cast<std::size_t>(flat.size()) != p.num_parameters())
        fail(ErrorKind::corrupt_store, "plugin.bin has the wrong parameter count");
      std::size_t at = 0;
      p.for_each_block([&](std::span<double> b) {
        for (double& x : b) x = flat.data()[at++];
      });
      m.plugin = std::move(p);
      m.neighbors = meta.at("neighbors").get<std::vector<std::vector<std::uint32_t>>>();
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::corrupt_store, std::string("model.json: ") + e.what());
  }
  return m;
}

}  // namespace uknow
