#include "doctest.h"
#include "retrieval_oracle.hpp"
#include "support.hpp"
#include "uknow/knowledge_scoring.hpp"

#include <cmath>

using namespace uknow;

namespace {

// 0 image, 1-2 objects of the image, 3 title, 4 second image, 5 other title,
// 6 unrelated object
Graph small_graph() {
  NodeTable t;
  const std::pair<Level, Modality> kinds[] = {
      {Level::L2, Modality::image}, {Level::L3, Modality::object}, {Level::L3, Modality::object},
      {Level::L2, Modality::text},  {Level::L2, Modality::image},  {Level::L2, Modality::text},
      {Level::L3, Modality::object}};
  for (std::size_t i = 0; i < std::size(kinds); ++i) {
    Node n;
    n.id = static_cast<NodeIndex>(i);
    n.level = kinds[i].first;
    n.modality = kinds[i].second;
    n.origin.id = i;
    t.nodes.push_back(n);
  }
  std::vector<Edge> edges{{0, 3, 1, 1.0},
                          {0, 5, 2, 1.0},
                          {0, 5, 1, 1.0},
                          {0, codes::kImageSimilarity, 4, 1.0},
                          {5, codes::kSameEventTitle, 3, 1.0},
                          {4, 7, 6, 1.0},
                          {0, codes::kImageTitle, 3, 1.0}};
  std::vector<std::vector<Edge>> lists{edges};
  return assemble_graph(std::move(t), lists, 0.8, 0);
}

RowMatrixXd small_rows() {
  RowMatrixXd r(7, 2);
  r << 9, 9, 1, 0, 0, 1, 7, 7, 3, 1, -1, 2, 5, 5;
  return r;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

}  // namespace

TEST_CASE("knowledge embedding pools each view") {
  const Graph g = small_graph();
  const auto nb = zk_neighbors(0, 3, g);
  CHECK(nb[0] == std::vector<NodeIndex>{1, 2});
  CHECK(nb[1].empty());
  CHECK(nb[2] == std::vector<NodeIndex>{4});
  CHECK(nb[3] == std::vector<NodeIndex>{5});

  const KnowledgeEmbedding zk = build_zk(0, 3, g, TableSource(small_rows()));
  CHECK(zk.blocks[0] == vec({0.5, 0.5}));
  CHECK(zk.blocks[1] == vec({0, 0}));
  CHECK(zk.blocks[2] == vec({3, 1}));
  CHECK(zk.blocks[3] == vec({-1, 2}));
  CHECK(zk.concat.size() == 8);
  CHECK(zk.concat.segment(4, 2) == zk.blocks[2]);
  CHECK(zk.projected == vec({2.5 / 4, 3.5 / 4}));
  CHECK(zk.pooled == std::array<std::size_t, 4>{2, 0, 1, 1});

  CHECK_FAILS_WITH(build_zk(3, 0, g, TableSource(small_rows())), ErrorKind::invalid_argument);
  CHECK_FAILS_WITH(build_zk(0, 99, g, TableSource(small_rows())), ErrorKind::invalid_argument);
}

TEST_CASE("knowledge embedding only looks at adjacent nodes") {
  const Graph g = small_graph();
  RowMatrixXd rows = small_rows();
  const KnowledgeEmbedding a = build_zk(0, 3, g, TableSource(rows));
  rows.row(6) << 100, -100;
  const KnowledgeEmbedding b = build_zk(0, 3, g, TableSource(rows));
  CHECK(a.concat == b.concat);
}

TEST_CASE("graph feature source on the toy graph") {
  const Corpus c = load_corpus_dir(test::toy_dir());
  const FeatureStore f = load_feature_manifest(test::toy_dir() / "features.jsonl", c);
  BuildOptions o;
  const Graph g = build_graph(c, f, o);
  const GraphFeatureSource src(g.nodes);
  CHECK(src.dim() == 32);
  for (const Node& n : g.nodes.nodes)
    if (n.kind() == "image") {
      const NodeIndex title = [&] {
        for (const Node& m : g.nodes.nodes)
          if (m.kind() == "title" && m.parent == n.parent) return m.id;
        return NodeIndex(0);
      }();
      const KnowledgeEmbedding zk = build_zk(n.id, title, g, src);
      for (const auto& b : zk.blocks) CHECK(b.size() == 32);
      CHECK(zk.concat.size() == 128);
      CHECK(zk.pooled[1] > 0);
    }
}

TEST_CASE("score by hand") {
  const Eigen::VectorXd u = vec({0.6, 0.8, 0}), x = vec({1, 0, 0}), y = vec({0, 1, 0}),
                        z = vec({0, 0, 1});
  CHECK(score_tik(u, u, u).total == 3.0);
  CHECK(score_tik(x, y, z).total == 0.0);
  CHECK(score_tik(x, Eigen::VectorXd(-x), y).total == -1.0);
  const TikScore none = score_tik(x, y, Eigen::VectorXd::Zero(3).eval());
  CHECK(none.terms[1] == 0.0);
  CHECK(none.terms[2] == 0.0);
  CHECK_FAILS_WITH(score_tik(Eigen::VectorXd::Zero(3).eval(), y, z), ErrorKind::undefined_similarity);
  CHECK_FAILS_WITH(score_tik(x, y, vec({1, 0})), ErrorKind::invalid_argument);
}

TEST_CASE("score symmetry and scale invariance") {
  Rng rng(17);
  auto random_vec = [&] {
    Eigen::VectorXd v(8);
    for (Eigen::Index i = 0; i < 8; ++i) v[i] = rng.uniform(-1, 1);
    return v;
  };
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd t = random_vec(), im = random_vec(), k = random_vec();
    const double base = score_tik(t, im, k).total;
    CHECK(std::abs(score_tik(im, t, k).total - base) < 1e-12);
    const double a = rng.uniform(0.01, 100), b = rng.uniform(0.01, 100);
    CHECK(std::abs(score_tik(Eigen::VectorXd(a * t), Eigen::VectorXd(b * im), k).total - base) < 1e-12);
    CHECK(std::abs(base) <= 3.0 + 1e-12);
  }
}

TEST_CASE("recall at k") {
  RowMatrixXd v(4, 2);
  v << 1, 0.1, 1, 0.2, -0.1, 1, -0.2, 1;
  const std::vector<std::string> l{"a", "a", "b", "b"};
  const RecallResult r = recall_at_k(v, l, v, l, 1, true);
  REQUIRE(r.recall.has_value());
  CHECK(*r.recall == 1.0);
  CHECK(r.eligible == 4);

  const std::vector<std::string> singletons{"a", "b", "c", ""};
  CHECK_FALSE(recall_at_k(v, singletons, v, singletons, 3, true).recall.has_value());
  CHECK_FAILS_WITH(recall_at_k(v, l, v, l, 0, true), ErrorKind::invalid_argument);
  CHECK(parse_retrieval_mode("txt2img") == RetrievalMode::txt2img);
  CHECK_FAILS_WITH(parse_retrieval_mode("img2audio"), ErrorKind::invalid_argument);
}

TEST_CASE("recall matches a full-sort oracle and grows with k") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = test::random_retrieval_case(rng, 30, 3);
    const auto g = test::random_retrieval_case(rng, 25, 3);
    double last = 0.0;
    for (std::size_t k : {1u, 3u, 5u, 10u}) {
      const auto same = recall_at_k(q.vectors, q.labels, q.vectors, q.labels, k, true);
      CHECK(same.recall == test::brute_recall(q.vectors, q.labels, q.vectors, q.labels, k, true));
      const auto cross = recall_at_k(q.vectors, q.labels, g.vectors, g.labels, k, false);
      CHECK(cross.recall == test::brute_recall(q.vectors, q.labels, g.vectors, g.labels, k, false));
      CHECK(same.recall.value_or(0) >= last);
      last = same.recall.value_or(0);
    }
  }
}

TEST_CASE("accuracy at k") {
  Eigen::MatrixXd s(2, 3);
  s << 0.9, 0.1, 0.0, 0.2, 0.7, 0.1;
  const std::vector<int> y{0, 1};
  CHECK(accuracy_at_k(s, y, 1) == 1.0);
  CHECK(accuracy_at_k(s, std::vector<int>{2, 2}, 3) == 1.0);
  Eigen::MatrixXd tie(1, 2);
  tie << 0.5, 0.5;
  CHECK(accuracy_at_k(tie, std::vector<int>{0}, 1) == 0.0);
  CHECK_FAILS_WITH(accuracy_at_k(s, std::vector<int>{0, 3}, 1), ErrorKind::invalid_argument);
  CHECK_FAILS_WITH(accuracy_at_k(s, y, 0), ErrorKind::invalid_argument);

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd r = test::random_scores(rng, 20, 11);
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) labels.push_back(static_cast<int>(rng.below(11)));
    double last = 0.0;
    for (std::size_t k = 1; k <= 11; ++k) {
      const double acc = accuracy_at_k(r, labels, k);
      CHECK(acc == test::brute_accuracy(r, labels, k));
      CHECK(acc >= last);
      last = acc;
    }
  }
}

TEST_CASE("toy retrieval runs in every mode") {
  const Corpus c = load_corpus_dir(test::toy_dir());
  const FeatureStore f = load_feature_manifest(test::toy_dir() / "features.jsonl", c);
  const Graph g = build_graph(c, f, BuildOptions{});
  const GraphFeatureSource src(g.nodes);
  for (auto m : {RetrievalMode::img2img, RetrievalMode::txt2txt, RetrievalMode::img2txt,
                 RetrievalMode::txt2img}) {
    const RecallResult r = retrieval_eval(g, m, 5, src);
    CHECK(r.eligible > 0);
    CHECK(r.hits <= r.eligible);
  }
}
