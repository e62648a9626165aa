#include "uknow/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "uknow/construct.hpp"
#include "uknow/corpus.hpp"
#include "uknow/digest.hpp"
#include "uknow/error.hpp"
#include "uknow/features.hpp"
#include "uknow/graph_store.hpp"
#include "uknow/knowledge_scoring.hpp"
#include "uknow/reasoning.hpp"

namespace uknow {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string RunManifest::to_json() const {
  ordered_json j;
  j["command"] = command;
  j["parameters"] = parameters;
  j["seeds"] = seeds;
  j["inputs"] = inputs;
  j["tool_version"] = tool_version;
  return j.dump(2) + "\n";
}

fs::path manifest_path_for(const fs::path& output, bool is_dir) {
  if (is_dir) return output / "run_manifest.json";
  return output.parent_path() / (output.filename().string() + ".manifest.json");
}

namespace {

struct Run {
  RunManifest manifest;
  fs::path manifest_path;

  void param(const std::string& name, const std::string& value) {
    manifest.parameters[name] = value;
  }
  void input(const fs::path& p) { manifest.inputs[p.string()] = digest_path(p); }
  void finish() const {
    if (!manifest_path.empty()) write_file_atomic(manifest_path, manifest.to_json());
  }
};

std::string fmt_double(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::string tok;
  std::istringstream in(text);
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      fail(ErrorKind::invalid_argument, "not a number: '" + tok + "'");
    }
  }
  return out;
}

// "a:b:step" (inclusive range) or a comma list.
std::vector<double> parse_taus(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_number_list(text);
  std::string spec = text;
  std::replace(spec.begin(), spec.end(), ':', ',');
  const auto parts = parse_number_list(spec);
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
    fail(ErrorKind::invalid_argument, "tau range must be lo:hi:step with lo <= hi, step > 0");
  std::vector<double> taus;
  for (std::size_t i = 0;; ++i) {
    const double t = std::round((parts[0] + static_cast<double>(i) * parts[2]) * 1e9) / 1e9;
    if (t > parts[1] + 1e-9) break;
    taus.push_back(t);
  }
  return taus;
}

ordered_json stats_json(const Stats& s) {
  ordered_json j;
  j["num_nodes"] = s.num_nodes;
  j["num_edges"] = s.num_edges;
  j["node_kind_histogram"] = s.node_kind_histogram;
  ordered_json codes = ordered_json::object();
  for (const auto& [c, n] : s.edge_code_histogram) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%03d", c);
    codes[buf] = n;
  }
  j["edge_code_histogram"] = codes;
  ordered_json views = ordered_json::object();
  for (const auto& [v, n] : s.view_histogram) views[std::string(to_string(v))] = n;
  j["view_histogram"] = views;
  ordered_json buckets = ordered_json::array();
  for (std::size_t b = 0; b < kDegreeBuckets; ++b)
    buckets.push_back({{"range", degree_bucket_label(b)},
                       {"count", s.degree_buckets[b]},
                       {"main_kind", s.bucket_main_kind[b]}});
  j["degree_buckets"] = buckets;
  j["rho_mean"] = s.rho_mean;
  j["rho_bucket_estimate"] = s.rho_bucket_estimate;
  return j;
}

void emit(std::ostream& out, const ordered_json& j) { out << j.dump(2) << "\n"; }

std::vector<std::vector<double>> read_number_rows(const fs::path& file) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(read_file(file));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::replace(line.begin(), line.end(), '\t', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::logic_error&) {
        fail(ErrorKind::malformed_line,
             file.string() + ":" + std::to_string(line_no) + ": not a number '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

const EmbeddingSource& pick_source(const std::string& source, const Graph& graph,
                                   const std::string& model_dir,
                                   std::unique_ptr<EmbeddingSource>& holder, Run& run) {
  if (source == "graph") {
    holder = std::make_unique<GraphFeatureSource>(graph.nodes);
  } else {
    if (model_dir.empty())
      fail(ErrorKind::invalid_argument, "--source model needs --model DIR");
    run.input(model_dir);
    const Model model = load_model(model_dir);
    if (model.table.num_entities() != graph.num_nodes())
      fail(ErrorKind::invalid_argument, "model entity count does not match the graph");
    holder = std::make_unique<TableSource>(model.representations());
  }
  return *holder;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal knowledge graph toolkit", "uknow"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // ingest
  std::string corpus_dir, out_path;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and print its summary");
  ingest->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  ingest->add_option("--out", out_path, "Also write the summary here");

  // featurize
  std::size_t feat_dim = 32;
  std::uint64_t seed = 0;
  auto* featurize = app.add_subcommand("featurize", "Write stub features for a corpus");
  featurize->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  featurize->add_option("--dim", feat_dim, "Embedding dimension");
  featurize->add_option("--seed", seed, "Hash seed");
  featurize->add_option("--out", out_path, "Feature manifest to write")->required();

  // build
  std::string features_path, registry_path;
  double tau = 0.8;
  std::size_t top_k = 0;
  auto* build = app.add_subcommand("build", "Build and save the graph");
  build->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  build->add_option("--features", features_path, "Feature manifest");
  build->add_option("--tau", tau, "Cosine threshold");
  build->add_option("--seed", seed, "Node permutation seed");
  build->add_option("--sim-topk", top_k, "Keep only the k most similar partners (0 = all)");
  build->add_option("--registry", registry_path, "Edge registry overrides (JSON)");
  build->add_option("--out", out_path, "Graph directory")->required();

  // stats
  std::string graph_dir;
  auto* stats = app.add_subcommand("stats", "Print graph statistics");
  stats->add_option("graph", graph_dir, "Graph directory")->required();
  stats->add_option("--out", out_path, "Also write the report here");

  // sweep
  std::string taus_text = "0.5:0.95:0.05";
  auto* sweep = app.add_subcommand("sweep", "Similarity edge counts over thresholds");
  sweep->add_option("graph", graph_dir, "Graph directory")->required();
  sweep->add_option("--taus", taus_text, "lo:hi:step or a comma list");
  sweep->add_option("--out", out_path, "Also write the report here");

  // split
  std::string ratios_text = "0.8,0.15,0.05", mode_text = "triple", split_name;
  std::string names_text = "train,val,test";
  auto* split = app.add_subcommand("split", "Partition the graph");
  split->add_option("graph", graph_dir, "Graph directory")->required();
  split->add_option("--ratios", ratios_text, "Three ratios summing to 1");
  split->add_option("--mode", mode_text, "triple or fact")
      ->check(CLI::IsMember({"triple", "fact"}));
  split->add_option("--seed", seed, "Shuffle seed");
  split->add_option("--names", names_text, "Partition names");
  split->add_option("--name", split_name, "Split name (default: the mode)");

  // train
  TrainConfig cfg;
  std::string model_name = "transe", plugin_text = "off", norm_text = "L1";
  std::string partition = "train";
  auto* train_cmd = app.add_subcommand("train", "Train link-prediction embeddings");
  train_cmd->add_option("graph", graph_dir, "Graph directory")->required();
  train_cmd->add_option("--model", model_name, "Model")->check(CLI::IsMember({"transe"}));
  train_cmd->add_option("--plugin", plugin_text, "Neighbor aggregation")
      ->check(CLI::IsMember({"on", "off"}));
  train_cmd->add_option("--dim", cfg.dim, "Embedding dimension");
  train_cmd->add_option("--margin", cfg.margin, "Ranking margin");
  train_cmd->add_option("--lr", cfg.learning_rate, "SGD learning rate");
  train_cmd->add_option("--epochs", cfg.epochs, "Epochs");
  train_cmd->add_option("--negatives", cfg.negatives, "Negatives per positive");
  train_cmd->add_option("--norm", norm_text, "L1 or L2")->check(CLI::IsMember({"L1", "L2"}));
  train_cmd->add_option("--neighbors", cfg.plugin_shape.neighbors, "Plugin neighbor cap m");
  train_cmd->add_option("--channels", cfg.plugin_shape.channels, "Plugin conv channels");
  train_cmd->add_option("--hidden", cfg.plugin_shape.hidden, "Plugin MLP width (0 = 4d)");
  train_cmd->add_option("--plugin-lr-scale", cfg.plugin_lr_scale,
                        "Learning-rate multiplier for plugin parameters");
  train_cmd->add_option("--seed", cfg.seed, "Training seed");
  train_cmd->add_option("--split-name", split_name, "Split under graph/splits (omit: all edges)");
  train_cmd->add_option("--partition", partition, "Partition to train on");
  train_cmd->add_option("--out", out_path, "Model directory")->required();

  // eval
  std::string model_dir, metrics_text = "mrr,h@1,h@3,h@10";
  auto* eval = app.add_subcommand("eval", "Filtered link-prediction metrics");
  eval->add_option("model", model_dir, "Model directory")->required();
  eval->add_option("graph", graph_dir, "Graph directory")->required();
  eval->add_option("--split", partition, "Partition to evaluate");
  eval->add_option("--split-name", split_name, "Split under graph/splits");
  eval->add_option("--metrics", metrics_text, "Comma list of mrr,h@1,h@3,h@10");
  eval->add_option("--out", out_path, "Also write the report here");

  // score
  NodeIndex image_node = 0, text_node = 0;
  std::string source = "graph";
  auto* score = app.add_subcommand("score", "Image-text-knowledge similarity");
  score->add_option("graph", graph_dir, "Graph directory")->required();
  score->add_option("--image-node", image_node, "Image node id")->required();
  score->add_option("--text-node", text_node, "Text node id")->required();
  score->add_option("--source", source, "graph or model")
      ->check(CLI::IsMember({"graph", "model"}));
  score->add_option("--model", model_dir, "Model directory for --source model");

  // retrieve
  std::string retrieval_mode = "img2txt";
  std::size_t k = 10;
  auto* retrieve = app.add_subcommand("retrieve", "Same-event retrieval recall");
  retrieve->add_option("graph", graph_dir, "Graph directory")->required();
  retrieve->add_option("--mode", retrieval_mode, "img2img, txt2txt, img2txt or txt2img");
  retrieve->add_option("--k", k, "Cutoff K");
  retrieve->add_option("--source", source, "graph or model")
      ->check(CLI::IsMember({"graph", "model"}));
  retrieve->add_option("--model", model_dir, "Model directory for --source model");

  // classify
  std::string scores_path, labels_path, ks_text = "1,5";
  auto* classify = app.add_subcommand("classify", "Top-K classification accuracy");
  classify->add_option("--scores", scores_path, "Score matrix, one row per query")->required();
  classify->add_option("--labels", labels_path, "True class index per row")->required();
  classify->add_option("--k", ks_text, "Comma list of cutoffs");
  classify->add_option("--out", out_path, "Also write the report here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::ostringstream discard;
      app.exit(e, out, discard);
      return kExitOk;
    }
    err << json{{"status", "error"}, {"kind", "usage"}, {"message", e.what()}}.dump() << "\n";
    return kExitUsage;
  }

  try {
    Run run;
    auto* sub = app.get_subcommands().front();
    run.manifest.command = sub->get_name();
    auto write_report = [&](const ordered_json& report) {
      emit(out, report);
      if (!out_path.empty()) {
        write_file_atomic(out_path, report.dump(2) + "\n");
        run.manifest_path = manifest_path_for(out_path, false);
      }
    };

    if (sub == ingest) {
      run.input(corpus_dir);
      const Corpus corpus = load_corpus_dir(corpus_dir);
      const CorpusSummary s = validate_corpus(corpus.pairs, corpus.news);
      ordered_json j;
      j["n_pairs"] = s.n_pairs;
      j["n_news"] = s.n_news;
      j["n_images"] = s.n_images;
      j["n_texts"] = s.n_texts;
      j["event_histogram"] = s.event_histogram;
      run.manifest_path = fs::path(corpus_dir) / "ingest.manifest.json";
      write_report(j);
    } else if (sub == featurize) {
      run.input(corpus_dir);
      run.param("dim", std::to_string(feat_dim));
      run.manifest.seeds["seed"] = seed;
      const Corpus corpus = load_corpus_dir(corpus_dir);
      validate_corpus(corpus.pairs, corpus.news);
      const auto records = stub_feature_records(corpus, feat_dim, seed);
      write_file_atomic(out_path, serialize_feature_manifest(records));
      run.manifest_path = manifest_path_for(out_path, false);
      emit(out, ordered_json{{"records", records.size()}, {"dim", feat_dim}, {"out", out_path}});
    } else if (sub == build) {
      run.input(corpus_dir);
      run.param("tau", fmt_double(tau));
      run.param("sim_top_k", std::to_string(top_k));
      run.manifest.seeds["seed"] = seed;
      const Corpus corpus = load_corpus_dir(corpus_dir);
      validate_corpus(corpus.pairs, corpus.news);
      FeatureStore features;
      if (!features_path.empty()) {
        run.input(features_path);
        features = load_feature_manifest(features_path, corpus);
      }
      BuildOptions opts;
      opts.tau = tau;
      opts.seed = seed;
      opts.sim_top_k = top_k;
      if (!registry_path.empty()) {
        run.input(registry_path);
        opts.registry = load_registry(registry_path);
      }
      const Graph g = build_graph(corpus, features, opts);
      save_graph(g, out_path);
      run.manifest_path = manifest_path_for(out_path, true);
      ordered_json views = ordered_json::object();
      for (const auto& [v, n] : view_counts(g)) views[std::string(to_string(v))] = n;
      emit(out, ordered_json{{"num_nodes", g.num_nodes()},
                             {"num_triples", g.num_triples()},
                             {"views", views},
                             {"out", out_path}});
    } else if (sub == stats) {
      run.input(graph_dir);
      const Graph g = load_graph(graph_dir);
      run.manifest_path = fs::path(graph_dir) / "stats.manifest.json";
      write_report(stats_json(compute_stats(g)));
    } else if (sub == sweep) {
      run.input(graph_dir);
      run.param("taus", taus_text);
      const Graph g = load_graph(graph_dir);
      ordered_json rows = ordered_json::array();
      for (const SweepPoint& p : tau_sweep(g, parse_taus(taus_text)))
        rows.push_back({{"tau", p.tau},
                        {"similarity_edges", p.similarity_edges},
                        {"rho_mean", p.rho_mean}});
      run.manifest_path = fs::path(graph_dir) / "sweep.manifest.json";
      write_report(rows);
    } else if (sub == split) {
      run.input(graph_dir);
      run.param("ratios", ratios_text);
      run.param("mode", mode_text);
      run.param("names", names_text);
      run.manifest.seeds["seed"] = seed;
      const auto r = parse_number_list(ratios_text);
      if (r.size() != 3) fail(ErrorKind::invalid_argument, "--ratios needs three values");
      std::array<std::string, 3> names;
      {
        std::istringstream in(names_text);
        std::vector<std::string> parts;
        for (std::string tok; std::getline(in, tok, ',');) parts.push_back(tok);
        if (parts.size() != 3) fail(ErrorKind::invalid_argument, "--names needs three names");
        std::copy(parts.begin(), parts.end(), names.begin());
      }
      const Graph g = load_graph(graph_dir);
      const Split s =
          split_graph(g, {r[0], r[1], r[2]}, parse_split_mode(mode_text), seed, names);
      const std::string name = split_name.empty() ? mode_text : split_name;
      const fs::path file = fs::path(graph_dir) / "splits" / (name + ".json");
      fs::create_directories(file.parent_path());
      save_split(s, file);
      run.manifest_path = manifest_path_for(file, false);
      ordered_json counts = ordered_json::object();
      for (std::uint8_t p = 0; p < 3; ++p) counts[names[p]] = s.count(p);
      emit(out, ordered_json{{"split", file.string()}, {"edges", counts}});
    } else if (sub == train_cmd) {
      run.input(graph_dir);
      cfg.plugin = plugin_text == "on";
      cfg.norm = parse_norm(norm_text);
      run.param("model", model_name);
      run.param("plugin", plugin_text);
      run.param("dim", std::to_string(cfg.dim));
      run.param("margin", fmt_double(cfg.margin));
      run.param("lr", fmt_double(cfg.learning_rate));
      run.param("epochs", std::to_string(cfg.epochs));
      run.param("negatives", std::to_string(cfg.negatives));
      run.param("norm", norm_text);
      if (cfg.plugin) {
        run.param("neighbors", std::to_string(cfg.plugin_shape.neighbors));
        run.param("channels", std::to_string(cfg.plugin_shape.channels));
        run.param("hidden", std::to_string(cfg.plugin_shape.hidden));
        run.param("plugin_lr_scale", fmt_double(cfg.plugin_lr_scale));
      }
      run.param("split_name", split_name);
      run.param("partition", partition);
      run.manifest.seeds["seed"] = cfg.seed;
      const Graph g = load_graph(graph_dir);
      std::vector<Edge> training = g.edges;
      if (!split_name.empty()) {
        const Split s =
            load_split(fs::path(graph_dir) / "splits" / (split_name + ".json"), g.edges.size());
        training = s.edges_of(g, s.partition_index(partition));
      }
      const Model m = train(g.num_nodes(), training, cfg);
      save_model(m, out_path);
      run.manifest_path = manifest_path_for(out_path, true);
      emit(out, ordered_json{{"triples", training.size()},
                             {"epochs", m.loss_curve.size()},
                             {"final_loss", m.loss_curve.empty() ? 0.0 : m.loss_curve.back()},
                             {"out", out_path}});
    } else if (sub == eval) {
      run.input(model_dir);
      run.input(graph_dir);
      const std::string part = sub->count("--split") ? partition : "test";
      run.param("split", part);
      run.param("split_name", split_name.empty() ? "triple" : split_name);
      run.param("metrics", metrics_text);
      const Model m = load_model(model_dir);
      const Graph g = load_graph(graph_dir);
      if (m.table.num_entities() != g.num_nodes())
        fail(ErrorKind::invalid_argument, "model entity count does not match the graph");
      const std::string name = split_name.empty() ? "triple" : split_name;
      const Split s = load_split(fs::path(graph_dir) / "splits" / (name + ".json"), g.edges.size());
      const auto test = s.edges_of(g, s.partition_index(part));
      const Metrics mt = evaluate(TransEPredictor(m), test, FilterIndex(g.edges));
      ordered_json j;
      for (const std::string& metric : [&] {
             std::vector<std::string> v;
             std::istringstream in(metrics_text);
             for (std::string t; std::getline(in, t, ',');) v.push_back(t);
             return v;
           }()) {
        if (metric == "mrr") j["mrr"] = mt.mrr;
        else if (metric == "h@1") j["h@1"] = mt.hits1;
        else if (metric == "h@3") j["h@3"] = mt.hits3;
        else if (metric == "h@10") j["h@10"] = mt.hits10;
        else fail(ErrorKind::invalid_argument, "unknown metric '" + metric + "'");
      }
      j["n_queries"] = mt.n_queries;
      j["seed"] = m.config.seed;
      run.manifest.seeds["seed"] = m.config.seed;
      run.manifest_path = fs::path(model_dir) / "eval.manifest.json";
      write_report(j);
    } else if (sub == score) {
      run.input(graph_dir);
      run.param("image_node", std::to_string(image_node));
      run.param("text_node", std::to_string(text_node));
      run.param("source", source);
      const Graph g = load_graph(graph_dir);
      std::unique_ptr<EmbeddingSource> holder;
      const EmbeddingSource& src = pick_source(source, g, model_dir, holder, run);
      const KnowledgeEmbedding zk = build_zk(image_node, text_node, g, src);
      const Eigen::VectorXd zT = src.vector(text_node);
      const Eigen::VectorXd zI = src.vector(image_node);
      if (zT.size() == 0 || zI.size() == 0)
        fail(ErrorKind::undefined_similarity, "image or text node has no vector");
      const TikScore s = score_tik(zT, zI, zk);
      run.manifest_path = fs::path(graph_dir) / "score.manifest.json";
      emit(out, ordered_json{{"terms", s.terms},
                             {"total", s.total},
                             {"pooled", zk.pooled}});
    } else if (sub == retrieve) {
      run.input(graph_dir);
      run.param("mode", retrieval_mode);
      run.param("k", std::to_string(k));
      run.param("source", source);
      const RetrievalMode mode = parse_retrieval_mode(retrieval_mode);
      const Graph g = load_graph(graph_dir);
      std::unique_ptr<EmbeddingSource> holder;
      const EmbeddingSource& src = pick_source(source, g, model_dir, holder, run);
      const RecallResult r = retrieval_eval(g, mode, k, src);
      ordered_json j;
      j["mode"] = retrieval_mode;
      j["k"] = k;
      j["recall"] = r.recall ? json(*r.recall) : json(nullptr);
      j["eligible"] = r.eligible;
      j["hits"] = r.hits;
      run.manifest_path = fs::path(graph_dir) / "retrieve.manifest.json";
      emit(out, j);
    } else if (sub == classify) {
      run.input(scores_path);
      run.input(labels_path);
      run.param("k", ks_text);
      const auto rows = read_number_rows(scores_path);
      const auto label_rows = read_number_rows(labels_path);
      std::vector<int> labels;
      for (const auto& row : label_rows)
        for (double x : row) {
          if (x != std::floor(x)) fail(ErrorKind::invalid_argument, "labels must be integers");
          labels.push_back(static_cast<int>(x));
        }
      if (rows.empty()) fail(ErrorKind::invalid_argument, "empty score matrix");
      Eigen::MatrixXd scores(static_cast<Eigen::Index>(rows.size()),
                             static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
          fail(ErrorKind::schema, "score rows differ in length");
        for (std::size_t c = 0; c < rows[i].size(); ++c)
          scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
      }
      ordered_json j;
      for (double kk : parse_number_list(ks_text)) {
        if (!(kk >= 1.0) || kk != std::floor(kk))
          fail(ErrorKind::invalid_argument, "K must be an integer >= 1");
        j["acc@" + std::to_string(static_cast<long>(kk))] =
            accuracy_at_k(scores, labels, static_cast<std::size_t>(kk));
      }
      j["n_rows"] = rows.size();
      run.manifest_path = fs::path(scores_path).parent_path() / "classify.manifest.json";
      write_report(j);
    }
    run.finish();
    return kExitOk;
  } catch (const Error& e) {
    err << json{{"status", "error"}, {"kind", to_string(e.kind())}, {"message", e.what()}}.dump()
        << "\n";
    return kExitData;
  } catch (const json::exception& e) {
    err << json{{"status", "error"}, {"kind", "schema"}, {"message", e.what()}}.dump() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << json{{"status", "error"}, {"kind", "internal"}, {"message", e.what()}}.dump() << "\n";
    return kExitInternal;
  }
}

}  // namespace uknow
