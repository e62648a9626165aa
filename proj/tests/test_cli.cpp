#include "doctest.h"
#include "support.hpp"
#include "uknow/cli.hpp"
#include "uknow/digest.hpp"
#include "uknow/graph_store.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

using namespace uknow;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = dispatch(args, out, err);
  return {status, out.str(), err.str()};
}

std::string toy() { return test::toy_dir().string(); }

// build, split, train and eval into `dir`; returns the eval report
Run pipeline(const fs::path& dir) {
  const std::string graph = (dir / "graph").string(), model = (dir / "model").string();
  REQUIRE(run({"build", "--corpus", toy(), "--features", toy() + "/features.jsonl", "--tau",
               "0.8", "--seed", "11", "--out", graph})
              .status == 0);
  REQUIRE(run({"split", graph, "--ratios", "0.8,0.15,0.05", "--mode", "triple", "--seed", "3"})
              .status == 0);
  REQUIRE(run({"train", graph, "--model", "transe", "--plugin", "off", "--dim", "16",
               "--epochs", "5", "--seed", "2", "--split-name", "triple", "--out", model})
              .status == 0);
  return run({"eval", model, graph, "--split", "test", "--metrics", "mrr,h@1,h@3,h@10"});
}

}  // namespace

TEST_CASE("usage and help") {
  const Run help = run({"--help"});
  CHECK(help.status == kExitOk);
  CHECK(help.out.find("build") != std::string::npos);

  const Run missing = run({"build"});
  CHECK(missing.status == kExitUsage);
  const auto diag = nlohmann::json::parse(missing.err);
  CHECK(diag["status"] == "error");

  CHECK(run({"frobnicate"}).status == kExitUsage);
}

TEST_CASE("data errors map to status 2") {
  const Run r = run({"stats", test::fresh_dir("cli_empty").string()});
  CHECK(r.status == kExitData);
  const auto diag = nlohmann::json::parse(r.err);
  CHECK(diag["kind"] == "missing-manifest");
  CHECK(run({"ingest", "--corpus", "/nonexistent/corpus"}).status == kExitData);
}

TEST_CASE("full toy pipeline") {
  const auto dir = test::fresh_dir("cli_pipeline");
  // ingest writes its manifest into the corpus directory
  const auto corpus = dir / "corpus";
  fs::copy(test::toy_dir(), corpus);
  const Run ingest = run({"ingest", "--corpus", corpus.string()});
  REQUIRE(ingest.status == 0);
  CHECK(fs::exists(corpus / "ingest.manifest.json"));
  CHECK(nlohmann::json::parse(ingest.out)["n_news"] == 20);

  const Run eval = pipeline(dir);
  REQUIRE(eval.status == 0);
  const auto report = nlohmann::json::parse(eval.out);
  for (const char* k : {"mrr", "h@1", "h@3", "h@10", "n_queries", "seed"})
    CHECK(report.contains(k));
  CHECK(report["mrr"].get<double>() > 0.0);
  CHECK(report["mrr"].get<double>() <= 1.0);
  CHECK(fs::exists(dir / "graph" / "run_manifest.json"));
  CHECK(fs::exists(dir / "model" / "run_manifest.json"));

  const auto stats = nlohmann::json::parse(run({"stats", (dir / "graph").string()}).out);
  CHECK(stats["num_nodes"] == 226);
  CHECK(stats["num_edges"] == 319);

  const Run sweep = run({"sweep", (dir / "graph").string(), "--taus", "0.5:0.9:0.1"});
  REQUIRE(sweep.status == 0);

  const Graph g = load_graph(dir / "graph");
  NodeIndex image = 0, title = 0;
  for (const Node& n : g.nodes.nodes)
    if (n.kind() == "image") image = n.id;
  for (const Node& n : g.nodes.nodes)
    if (n.kind() == "title" && n.parent == g.nodes.at(image).parent) title = n.id;
  const Run score = run({"score", (dir / "graph").string(), "--image-node",
                         std::to_string(image), "--text-node", std::to_string(title)});
  REQUIRE(score.status == 0);
  const auto s = nlohmann::json::parse(score.out);
  CHECK(s["terms"].size() == 3);
  CHECK(std::abs(s["total"].get<double>()) <= 3.0);
  CHECK(run({"score", (dir / "graph").string(), "--image-node", std::to_string(title),
             "--text-node", std::to_string(image)})
            .status == kExitData);

  const Run retrieve = run({"retrieve", (dir / "graph").string(), "--mode", "img2txt", "--k", "5"});
  CHECK(retrieve.status == 0);
}

TEST_CASE("reruns are byte-identical") {
  const auto a = test::fresh_dir("cli_rerun_a"), b = test::fresh_dir("cli_rerun_b");
  const Run ra = pipeline(a), rb = pipeline(b);
  CHECK(ra.out == rb.out);
  for (const char* f : {"graph/meta.json", "graph/nodes.jsonl", "graph/edges.jsonl",
                        "graph/embeddings.bin", "graph/splits/triple.json",
                        "model/entities.bin", "model/relations.bin", "model/model.json"})
    CHECK(read_file(a / f) == read_file(b / f));
}

TEST_CASE("classify") {
  const auto dir = test::fresh_dir("cli_classify");
  write_file_atomic(dir / "scores.txt", "0.9 0.1 0.0\n0.2,0.7,0.1\n0.5 0.2 0.3\n");
  write_file_atomic(dir / "labels.txt", "0\n1\n2\n");
  const Run r = run({"classify", "--scores", (dir / "scores.txt").string(), "--labels",
                     (dir / "labels.txt").string(), "--k", "1,2"});
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["acc@1"] == 2.0 / 3.0);
  CHECK(j["acc@2"] == 1.0);
  CHECK(j["n_rows"] == 3);
}
