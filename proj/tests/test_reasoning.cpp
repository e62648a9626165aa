#include "doctest.h"
#include "support.hpp"
#include "synthetic.hpp"
#include "uknow/digest.hpp"
#include "uknow/reasoning.hpp"

#include <cmath>

using namespace uknow;

TEST_CASE("embedding init") {
  TrainConfig cfg;
  cfg.dim = 32;
  cfg.seed = 4;
  const EmbeddingTable t = init_embeddings(100, cfg);
  CHECK(t.entities.rows() == 100);
  CHECK(t.entities.cols() == 32);
  CHECK(t.relations.rows() == kEdgeCodes);
  for (Eigen::Index i = 0; i < t.entities.rows(); ++i)
    CHECK(std::abs(t.entities.row(i).norm() - 1.0) < 1e-12);
  const double bound = 6.0 / std::sqrt(32.0);
  CHECK(t.relations.cwiseAbs().maxCoeff() <= bound);
  CHECK(init_embeddings(100, cfg) == t);
  cfg.dim = 0;
  CHECK_FAILS_WITH(init_embeddings(100, cfg), ErrorKind::invalid_argument);
}

TEST_CASE("transe score by hand") {
  EmbeddingTable t;
  t.entities = RowMatrixXd::Zero(3, 2);
  t.relations = RowMatrixXd::Zero(kEdgeCodes, 2);
  t.entities.row(1) << 0, 1;
  t.relations.row(5) << 1, 0;
  t.entities.row(2) << 1, 0;
  CHECK(transe_score(0, 5, 1, t, Norm::L1) == 2.0);
  CHECK(transe_score(0, 5, 1, t, Norm::L2) == std::sqrt(2.0));
  CHECK(transe_score(0, 5, 2, t, Norm::L1) == 0.0);
  CHECK_FAILS_WITH(transe_score(0, 200, 1, t, Norm::L1), ErrorKind::invalid_argument);
  CHECK_FAILS_WITH(transe_score(7, 5, 1, t, Norm::L1), ErrorKind::invalid_argument);
}

TEST_CASE("zero margin and identical negative gives no update") {
  TrainConfig cfg;
  cfg.dim = 8;
  EmbeddingTable t = init_embeddings(4, cfg);
  const EmbeddingTable before = t;
  const Edge e{0, 3, 1, 1.0};
  for (Norm n : {Norm::L1, Norm::L2}) {
    const StepResult r = transe_sgd_step(t, e, e, 0.0, 0.1, n);
    CHECK(r.loss == 0.0);
    CHECK_FALSE(r.updated);
  }
  CHECK(t == before);
}

TEST_CASE("transe gradient matches finite differences") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd diff(6);
    for (Eigen::Index i = 0; i < diff.size(); ++i) diff[i] = rng.uniform(-1, 1);
    for (Norm norm : {Norm::L1, Norm::L2}) {
      const Eigen::VectorXd g = translation_gradient(diff, norm);
      for (Eigen::Index i = 0; i < diff.size(); ++i) {
        Eigen::VectorXd up = diff, down = diff;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        auto d = [norm](const Eigen::VectorXd& v) {
          return norm == Norm::L1 ? v.lpNorm<1>() : v.norm();
        };
        CHECK(std::abs((d(up) - d(down)) / 2e-6 - g[i]) < 1e-6);
      }
    }
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  const auto s = test::compositional_graph(1);
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 10;
  cfg.seed = 3;
  const Model a = train(s.num_entities, s.train, cfg);
  const Model b = train(s.num_entities, s.train, cfg);
  CHECK(a == b);
  cfg.seed = 4;
  CHECK_FALSE(train(s.num_entities, s.train, cfg).table == a.table);
  CHECK_FAILS_WITH(train(s.num_entities, std::vector<Edge>{}, cfg), ErrorKind::invalid_argument);
}

TEST_CASE("smoothed loss falls on the synthetic graph") {
  const auto s = test::compositional_graph(1);
  TrainConfig cfg;
  cfg.dim = 32;
  cfg.epochs = 200;
  cfg.seed = 1;
  const Model m = train(s.num_entities, s.train, cfg);
  const auto& c = m.loss_curve;
  REQUIRE(c.size() == 200);
  auto smoothed = [&](std::size_t end) {
    double sum = 0;
    for (std::size_t i = end - 10; i < end; ++i) sum += c[i];
    return sum / 10.0;
  };
  const double first = smoothed(200 / 3), last = smoothed(200);
  CHECK(last <= first);
  CHECK(smoothed(10) >= first);
}

TEST_CASE("divergence is reported") {
  const auto s = test::compositional_graph(1);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 3;
  cfg.learning_rate = 1e308;
  cfg.margin = 1e308;
  cfg.norm = Norm::L2;
  try {
    train(s.num_entities, s.train, cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::divergence);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

namespace {
class FixedScores : public LinkPredictor {
 public:
  explicit FixedScores(std::vector<double> d) : d_(std::move(d)) {}
  std::size_t num_entities() const override { return d_.size(); }
  void distances(const TripleQuery&, std::span<double> out) const override {
    std::copy(d_.begin(), d_.end(), out.begin());
  }

 private:
  std::vector<double> d_;
};
}  // namespace

TEST_CASE("filtered rank tie policy and filtering") {
  const FilterIndex none;
  CHECK(rank_answer({0, 0, Direction::tail}, 3, FixedScores(std::vector<double>(10, 1.0)), none) == 10);
  CHECK(rank_answer({0, 0, Direction::tail}, 2, FixedScores({3, 2, 0.5, 1}), none) == 1);
  CHECK(rank_answer({0, 0, Direction::tail}, 3, FixedScores({3, 2, 0.5, 1}), none) == 2);

  const std::vector<Edge> known{{0, 0, 2, 1.0}, {0, 0, 3, 1.0}};
  const FilterIndex f(known);
  CHECK(rank_answer({0, 0, Direction::tail}, 3, FixedScores({3, 2, 0.5, 1}), f) == 1);
  CHECK(rank_answer({0, 0, Direction::head}, 3, FixedScores({3, 2, 0.5, 1}), f) == 2);
  CHECK_FAILS_WITH(rank_answer({0, 0, Direction::tail}, 9, FixedScores({1, 2}), none),
                   ErrorKind::invalid_argument);
}

TEST_CASE("filtered rank never exceeds raw rank") {
  const auto s = test::compositional_graph(2);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 5;
  const TransEPredictor p(train(s.num_entities, s.train, cfg));
  const FilterIndex f(s.all), raw;
  for (const Edge& e : s.test) {
    const TripleQuery q{e.head, e.code, Direction::tail};
    CHECK(rank_answer(q, e.tail, p, f) <= rank_answer(q, e.tail, p, raw));
  }
}

TEST_CASE("metric formulas") {
  const std::vector<std::size_t> one{1}, four{4}, both{1, 4};
  const Metrics a = metrics_from_ranks(one);
  CHECK(a.mrr == 1.0);
  CHECK(a.hits1 == 1.0);
  CHECK(a.hits3 == 1.0);
  CHECK(a.hits10 == 1.0);
  const Metrics b = metrics_from_ranks(four);
  CHECK(b.mrr == 0.25);
  CHECK(b.hits1 == 0.0);
  CHECK(b.hits3 == 0.0);
  CHECK(b.hits10 == 1.0);
  const Metrics c = metrics_from_ranks(both);
  CHECK(c.mrr == 0.625);
  CHECK(c.hits1 == 0.5);
  CHECK(c.n_queries == 2);
  CHECK_FAILS_WITH(metrics_from_ranks(std::vector<std::size_t>{}), ErrorKind::invalid_argument);
  const FilterIndex f;
  CHECK_FAILS_WITH(evaluate(FixedScores({1, 2}), std::vector<Edge>{}, f),
                   ErrorKind::invalid_argument);
}

TEST_CASE("relabeling entities leaves metrics unchanged") {
  const auto s = test::compositional_graph(3);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 5;
  const Model m = train(s.num_entities, s.train, cfg);

  std::vector<NodeIndex> perm(s.num_entities);
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(8);
  shuffle(std::span<NodeIndex>(perm), rng);
  Model pm = m;
  for (std::size_t i = 0; i < perm.size(); ++i)
    pm.table.entities.row(perm[i]) = m.table.entities.row(static_cast<Eigen::Index>(i));
  auto relabel = [&](std::vector<Edge> es) {
    for (Edge& e : es) {
      e.head = perm[e.head];
      e.tail = perm[e.tail];
    }
    return es;
  };
  const Metrics a = evaluate(TransEPredictor(m), s.test, FilterIndex(s.all));
  const Metrics b = evaluate(TransEPredictor(pm), relabel(s.test), FilterIndex(relabel(s.all)));
  CHECK(a.mrr == b.mrr);
  CHECK(a.hits10 == b.hits10);
  CHECK(a.hits1 <= a.hits3);
  CHECK(a.hits3 <= a.hits10);
  CHECK(a.mrr > 0.0);
  CHECK(a.mrr <= 1.0);
}

TEST_CASE("model save and load") {
  const auto s = test::compositional_graph(1);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 2;
  for (bool plugin : {false, true}) {
    cfg.plugin = plugin;
    cfg.plugin_shape.hidden = 16;
    const Model m = train(s.num_entities, s.train, cfg);
    const auto dir = test::fresh_dir(plugin ? "model_plugin" : "model");
    save_model(m, dir);
    CHECK(load_model(dir) == m);
    const std::string blob = read_file(dir / "entities.bin");
    write_file_atomic(dir / "entities.bin", blob.substr(0, blob.size() - 8));
    CHECK_FAILS_WITH(load_model(dir), ErrorKind::corrupt_store);
  }
  CHECK_FAILS_WITH(load_model(test::fresh_dir("model_none")), ErrorKind::missing_manifest);
}

TEST_CASE("config validation and norm names") {
  CHECK(parse_norm("L2") == Norm::L2);
  CHECK(to_string(Norm::L1) == "L1");
  CHECK_FAILS_WITH(parse_norm("L3"), ErrorKind::invalid_argument);
  TrainConfig cfg;
  cfg.learning_rate = 0;
  CHECK_FAILS_WITH(cfg.validate(), ErrorKind::invalid_argument);
  cfg = {};
  cfg.negatives = 0;
  CHECK_FAILS_WITH(cfg.validate(), ErrorKind::invalid_argument);
}
