#include "doctest.h"
#include "support.hpp"
#include "uknow/features.hpp"

using namespace uknow;

TEST_CASE("stub featurizer is deterministic and unit-norm") {
  const auto a = stub_featurize("Shelling resumes near Donetsk airport", 32, 7);
  const auto b = stub_featurize("Shelling resumes near Donetsk airport", 32, 7);
  CHECK(a.size() == 32);
  CHECK((a.array() == b.array()).all());
  CHECK(std::abs(a.norm() - 1.0) < 1e-9);
  CHECK(stub_featurize("x", 8, 0).size() == 8);
  CHECK(std::abs(stub_featurize("", 8, 0).norm() - 1.0) < 1e-9);
  CHECK_FALSE((stub_featurize("abc", 16, 1).array() == stub_featurize("abc", 16, 2).array()).all());
  CHECK_FAILS_WITH(stub_featurize("x", 0, 0), ErrorKind::invalid_argument);
}

TEST_CASE("stub vectors of texts sharing words are correlated") {
  const auto a = stub_featurize("wildfire spreads across victoria hills", 64, 3);
  const auto b = stub_featurize("wildfire spreads across victoria", 64, 3);
  const auto c = stub_featurize("central bank raises interest rates", 64, 3);
  CHECK(cosine(a, b) > cosine(a, c));
  CHECK(cosine(a, b) > 0.6);
}

TEST_CASE("cosine") {
  Eigen::VectorXd u(3);
  u << 0.3, -1.2, 4.0;
  CHECK(std::abs(cosine(u, u) - 1.0) < 1e-12);
  CHECK(cosine(u, u) == 1.0);
  Eigen::Vector2d x(1, 0), y(0, 1), z(0, 0);
  CHECK(cosine(x, y) == 0.0);
  CHECK_FAILS_WITH(cosine(z, x), ErrorKind::undefined_similarity);
  CHECK_FAILS_WITH(cosine(u, x), ErrorKind::invalid_argument);
  CHECK(cosine(u, Eigen::VectorXd(2.5 * u)) == doctest::Approx(1.0).epsilon(1e-15));
}

namespace {
Corpus one_news() { return Corpus{{}, {test::news(1, "title", "content", {"a.jpg"}, {"desc"})}}; }

std::string emb_line(const std::string& owner, int dim, double fill = 0.5) {
  std::string v = "[";
  for (int i = 0; i < dim; ++i) v += (i ? "," : "") + std::to_string(fill);
  return R"({"owner":)" + owner + R"(,"kind":"embedding","payload":)" + v + "]}";
}
}  // namespace

TEST_CASE("feature manifest loading") {
  const Corpus c = one_news();
  const FeatureStore s =
      parse_feature_manifest(emb_line(R"({"fact_id":1,"selector":"title"})", 16) + "\n", c);
  CHECK(s.dim() == 16);
  CHECK(s.size() == 1);
  CHECK(s.embedding({OwnerKind::fact, 1, Selector::title, 0}) != nullptr);
  CHECK(s.embedding({OwnerKind::fact, 1, Selector::content, 0}) == nullptr);
  CHECK(s.detections({OwnerKind::fact, 1, Selector::image, 0}).empty());

  CHECK_FAILS_WITH(
      parse_feature_manifest(emb_line(R"({"fact_id":9,"selector":"title"})", 16), c),
      ErrorKind::dangling_owner);
  CHECK_FAILS_WITH(
      parse_feature_manifest(emb_line(R"({"fact_id":1,"selector":"title"})", 16) + "\n" +
                                 emb_line(R"({"fact_id":1,"selector":"content"})", 32),
                             c),
      ErrorKind::schema);
  CHECK_FAILS_WITH(
      parse_feature_manifest(emb_line(R"({"fact_id":1,"selector":"image[3]"})", 4), c),
      ErrorKind::dangling_owner);
}

TEST_CASE("detection and entity payload validation") {
  const Corpus c = one_news();
  auto det = [&](const std::string& sel, const std::string& item) {
    return parse_feature_manifest(R"({"owner":{"fact_id":1,"selector":")" + sel +
                                      R"("},"kind":"detection","payload":[)" + item + "]}",
                                  c);
  };
  CHECK(det("image[0]", R"({"class_index":0,"box":[0,0,0.5,0.5],"crop_embedding":[1,0]})")
            .detections({OwnerKind::fact, 1, Selector::image, 0})
            .size() == 1);
  CHECK_FAILS_WITH(det("image[0]", R"({"class_index":80,"box":[0,0,1,1],"crop_embedding":[]})"),
                   ErrorKind::schema);
  CHECK_FAILS_WITH(det("image[0]", R"({"class_index":1,"box":[0.5,0,0.5,1],"crop_embedding":[]})"),
                   ErrorKind::schema);
  CHECK_FAILS_WITH(det("title", R"({"class_index":1,"box":[0,0,1,1],"crop_embedding":[]})"),
                   ErrorKind::schema);

  auto ent = [&](const std::string& item) {
    return parse_feature_manifest(
        R"({"owner":{"fact_id":1,"selector":"content"},"kind":"entity","payload":[)" + item +
            "]}",
        c);
  };
  CHECK(ent(R"({"surface":"Kyiv","ner_index":5,"span":[0,4]})")
            .entities({OwnerKind::fact, 1, Selector::content, 0})
            .size() == 1);
  CHECK_FAILS_WITH(ent(R"({"surface":"Kyiv","ner_index":18,"span":[0,4]})"), ErrorKind::schema);
}

TEST_CASE("stub manifest round-trips through the loader") {
  const Corpus c = load_corpus_dir(test::toy_dir());
  const auto records = stub_feature_records(c, 16, 5);
  const std::string text = serialize_feature_manifest(records);
  const FeatureStore s = parse_feature_manifest(text, c);
  CHECK(s.dim() == 16);
  CHECK(s.records() == records);
  CHECK(serialize_feature_manifest(s.records()) == text);
}

TEST_CASE("shipped toy features equal a fresh stub run") {
  const Corpus c = load_corpus_dir(test::toy_dir());
  CHECK(read_file(test::toy_dir() / "features.jsonl") ==
        serialize_feature_manifest(stub_feature_records(c, 32, 7)));
}

TEST_CASE("selector strings") {
  CHECK(parse_selector("image_desc[2]") == std::pair(Selector::image_desc, 2u));
  CHECK(parse_selector("pair_text") == std::pair(Selector::pair_text, 0u));
  CHECK(FeatureOwner{OwnerKind::fact, 1, Selector::image, 2}.selector_string() == "image[2]");
  CHECK_FAILS_WITH(parse_selector("headline"), ErrorKind::schema);
}
