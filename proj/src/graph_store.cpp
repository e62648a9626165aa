#include "uknow/graph_store.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "uknow/digest.hpp"
#include "uknow/rng.hpp"
#include "uknow/tensor_io.hpp"

namespace uknow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMeta = "meta.json";
constexpr const char* kNodes = "nodes.jsonl";
constexpr const char* kEdges = "edges.jsonl";
constexpr const char* kEmbeddings = "embeddings.bin";

json origin_to_json(const Origin& o) {
  return {{"owner", o.owner == OwnerKind::fact ? "fact" : "pair"},
          {"id", o.id},
          {"selector", selector_name(o.selector)},
          {"slot", o.slot},
          {"item", o.item}};
}

std::string nodes_jsonl(const NodeTable& table) {
  std::string out;
  for (const Node& n : table.nodes) {
    nlohmann::ordered_json j;
    j["id"] = n.id;
    j["level"] = to_string(n.level);
    j["modality"] = to_string(n.modality);
    j["origin"] = origin_to_json(n.origin);
    j["parent"] = n.parent ? json(*n.parent) : json(nullptr);
    j["embedding_row"] = n.embedding_row;
    j["attrs"] = n.attrs;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string edges_jsonl(const std::vector<Edge>& edges) {
  std::string out;
  for (const Edge& e : edges) {
    nlohmann::ordered_json j;
    j["h"] = e.head;
    j["r"] = e.code;
    j["t"] = e.tail;
    j["w"] = e.weight;
    out += j.dump();
    out += '\n';
  }
  return out;
}

template <typename Fn>
void for_each_jsonl(const std::string& text, const char* file, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos)
      fail(ErrorKind::corrupt_store, std::string(file) + ": unterminated last line");
    ++line_no;
    try {
      fn(json::parse(text.begin() + static_cast<std::ptrdiff_t>(pos),
                     text.begin() + static_cast<std::ptrdiff_t>(end)));
    } catch (const json::exception& e) {
      fail(ErrorKind::corrupt_store,
           std::string(file) + " line " + std::to_string(line_no) + ": " + e.what());
    }
    pos = end + 1;
  }
}

Selector selector_from_name(const std::string& name) {
  for (auto s : {Selector::title, Selector::content, Selector::image,
                 Selector::image_desc, Selector::pair_text, Selector::pair_image})
    if (selector_name(s) == name) return s;
  fail(ErrorKind::corrupt_store, "bad selector '" + name + "'");
}

}  // namespace

void save_graph(const Graph& g, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string nodes = nodes_jsonl(g.nodes);
  const std::string edges = edges_jsonl(g.edges);
  const std::string emb = encode_tensor(g.nodes.embeddings, kEmbeddingMagic);

  json registry = json::array();
  for (const EdgeType& t : g.registry.entries())
    registry.push_back({{"code", t.code},
                        {"name", t.name},
                        {"view", to_string(t.view)},
                        {"method", to_string(t.method)}});

  json meta;
  meta["format"] = "uknow-graph";
  meta["version"] = kGraphFormatVersion;
  meta["tau"] = g.tau;
  meta["build_seed"] = g.build_seed;
  meta["permutation_seed"] = g.nodes.permutation_seed;
  meta["counts"] = {{"nodes", g.num_nodes()},
                    {"edges", g.num_triples()},
                    {"embedding_rows", g.nodes.embeddings.rows()},
                    {"embedding_dim", g.nodes.embeddings.cols()}};
  meta["provenance"] = g.provenance;
  meta["registry"] = std::move(registry);
  meta["checksums"] = {{kNodes, sha256_hex(nodes)},
                       {kEdges, sha256_hex(edges)},
                       {kEmbeddings, sha256_hex(emb)}};

  write_file_atomic(dir / kNodes, nodes);
  write_file_atomic(dir / kEdges, edges);
  write_file_atomic(dir / kEmbeddings, emb);
  // meta last, so a reader never sees a manifest for files not yet written
  write_file_atomic(dir / kMeta, meta.dump(2) + "\n");
}

Graph load_graph(const fs::path& dir) {
  if (!fs::exists(dir / kMeta))
    fail(ErrorKind::missing_manifest, "no " + std::string(kMeta) + " in " + dir.string());

  json meta;
  try {
    meta = json::parse(read_file(dir / kMeta));
  } catch (const json::exception& e) {
    fail(ErrorKind::corrupt_store, std::string(kMeta) + ": " + e.what());
  }

  Graph g;
  try {
    if (meta.at("format") != "uknow-graph")
      fail(ErrorKind::corrupt_store, "not a graph store");
    if (meta.at("version").get<int>() != kGraphFormatVersion)
      fail(ErrorKind::corrupt_store,
           "unsupported store version " + meta.at("version").dump());

    std::map<std::string, std::string> blobs;
    for (const char* name : {kNodes, kEdges, kEmbeddings}) {
      if (!fs::exists(dir / name))
        fail(ErrorKind::corrupt_store, std::string("missing ") + name);
      blobs[name] = read_file(dir / name);
      if (sha256_hex(blobs[name]) != meta.at("checksums").at(name).get<std::string>())
        fail(ErrorKind::corrupt_store, std::string("checksum mismatch on ") + name);
    }

    g.tau = meta.at("tau").get<double>();
    g.build_seed = meta.at("build_seed").get<std::uint64_t>();
    g.nodes.permutation_seed = meta.at("permutation_seed").get<std::uint64_t>();
    g.provenance = meta.at("provenance").get<std::map<std::string, std::string>>();

    EdgeRegistry reg = EdgeRegistry::defaults();
    json overrides = json::object();
    for (const json& t : meta.at("registry"))
      overrides[std::to_string(t.at("code").get<int>())] = {
          {"name", t.at("name")}, {"view", t.at("view")}, {"method", t.at("method")}};
    reg.apply_overrides(overrides);
    g.registry = std::move(reg);

    g.nodes.embeddings = decode_tensor<float>(blobs[kEmbeddings], kEmbeddingMagic);

    const std::size_t n_nodes = meta.at("counts").at("nodes").get<std::size_t>();
    for_each_jsonl(blobs[kNodes], kNodes, [&](const json& j) {
      Node n;
      n.id = j.at("id").get<NodeIndex>();
      if (n.id != g.nodes.nodes.size())
        fail(ErrorKind::corrupt_store, "node ids out of sequence at " + std::to_string(n.id));
      n.level = parse_level(j.at("level").get<std::string>());
      n.modality = parse_modality(j.at("modality").get<std::string>());
      const json& o = j.at("origin");
      n.origin.level = n.level;
      n.origin.owner = o.at("owner").get<std::string>() == "fact" ? OwnerKind::fact
                                                                 : OwnerKind::pair;
      n.origin.id = o.at("id").get<std::uint64_t>();
      n.origin.selector = selector_from_name(o.at("selector").get<std::string>());
      n.origin.slot = o.at("slot").get<std::uint32_t>();
      n.origin.item = o.at("item").get<std::int32_t>();
      if (!j.at("parent").is_null()) n.parent = j.at("parent").get<NodeIndex>();
      n.embedding_row = j.at("embedding_row").get<std::int64_t>();
      if (n.embedding_row >= g.nodes.embeddings.rows())
        fail(ErrorKind::corrupt_store, "embedding row out of range");
      n.attrs = j.at("attrs");
      g.nodes.nodes.push_back(std::move(n));
    });
    if (g.nodes.nodes.size() != n_nodes)
      fail(ErrorKind::corrupt_store, "node count does not match meta.json");

    for_each_jsonl(blobs[kEdges], kEdges, [&](const json& j) {
      Edge e{j.at("h").get<NodeIndex>(), j.at("r").get<EdgeCode>(),
             j.at("t").get<NodeIndex>(), j.at("w").get<double>()};
      if (e.head >= n_nodes || e.tail >= n_nodes || e.code >= kEdgeCodes)
        fail(ErrorKind::corrupt_store, "edge references an unknown node or code");
      g.edges.push_back(e);
    });
    if (g.edges.size() != meta.at("counts").at("edges").get<std::size_t>())
      fail(ErrorKind::corrupt_store, "edge count does not match meta.json");
  } catch (const json::exception& e) {
    fail(ErrorKind::corrupt_store, std::string("malformed store: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::corrupt_store) throw;
    fail(ErrorKind::corrupt_store, e.what());
  }
  return g;
}

// ---------------------------------------------------------------------------
// Splits

std::string_view to_string(SplitMode mode) {
  return mode == SplitMode::fact ? "fact" : "triple";
}

SplitMode parse_split_mode(std::string_view text) {
  if (text == "fact") return SplitMode::fact;
  if (text == "triple") return SplitMode::triple;
  fail(ErrorKind::invalid_argument, "split mode must be fact or triple");
}

std::size_t Split::count(std::uint8_t partition) const {
  return static_cast<std::size_t>(
      std::count(edge_partition.begin(), edge_partition.end(), partition));
}

std::vector<Edge> Split::edges_of(const Graph& graph, std::uint8_t partition) const {
  if (edge_partition.size() != graph.edges.size())
    fail(ErrorKind::invalid_argument, "split does not belong to this graph");
  std::vector<Edge> out;
  for (std::size_t i = 0; i < graph.edges.size(); ++i)
    if (edge_partition[i] == partition) out.push_back(graph.edges[i]);
  return out;
}

std::uint8_t Split::partition_index(std::string_view name) const {
  for (std::uint8_t p = 0; p < 3; ++p)
    if (names[p] == name) return p;
  fail(ErrorKind::invalid_argument, "split has no partition '" + std::string(name) + "'");
}

std::array<std::size_t, 3> largest_remainder_sizes(std::size_t n,
                                                   const std::array<double, 3>& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) fail(ErrorKind::invalid_argument, "split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    fail(ErrorKind::invalid_argument, "split ratios must sum to 1");

  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact));
    frac[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
  return sizes;
}

namespace {

// Owner unit label of every node: the fact for news content, the pair for
// pair content.
std::vector<std::string> unit_of_nodes(const NodeTable& nodes) {
  std::vector<std::string> out(nodes.size());
  for (const Node& n : nodes.nodes)
    out[n.id] = (n.origin.owner == OwnerKind::fact ? "fact:" : "pair:") +
                std::to_string(n.origin.id);
  return out;
}

}  // namespace

Split split_graph(const Graph& graph, const std::array<double, 3>& ratios,
                  SplitMode mode, std::uint64_t seed,
                  const std::array<std::string, 3>& names) {
  Split s;
  s.mode = mode;
  s.ratios = ratios;
  s.seed = seed;
  s.names = names;
  Rng rng(seed);

  if (mode == SplitMode::triple) {
    const std::size_t n = graph.edges.size();
    const auto sizes = largest_remainder_sizes(n, ratios);
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    shuffle(std::span<std::uint32_t>(order), rng);
    s.edge_partition.assign(n, 0);
    std::size_t at = 0;
    for (std::uint8_t p = 0; p < 3; ++p)
      for (std::size_t k = 0; k < sizes[p]; ++k) s.edge_partition[order[at++]] = p;
    return s;
  }

  // fact mode: units in canonical order (facts by id, then pairs by id)
  std::vector<std::pair<Origin, std::string>> owners;
  for (const Node& n : graph.nodes.nodes) {
    if (n.level == Level::L1 ||
        (n.level == Level::L2 && n.origin.owner == OwnerKind::pair &&
         n.origin.selector == Selector::pair_text)) {
      Origin key{Level::L1, n.origin.owner, n.origin.id, Selector::title, 0, -1};
      owners.emplace_back(key, (n.origin.owner == OwnerKind::fact ? "fact:" : "pair:") +
                                   std::to_string(n.origin.id));
    }
  }
  std::sort(owners.begin(), owners.end());
  const auto sizes = largest_remainder_sizes(owners.size(), ratios);
  std::vector<std::uint32_t> order(owners.size());
  std::iota(order.begin(), order.end(), 0u);
  shuffle(std::span<std::uint32_t>(order), rng);

  s.units.reserve(owners.size());
  for (auto& o : owners) s.units.push_back(o.second);
  s.unit_partition.assign(owners.size(), 0);
  std::size_t at = 0;
  for (std::uint8_t p = 0; p < 3; ++p)
    for (std::size_t k = 0; k < sizes[p]; ++k) s.unit_partition[order[at++]] = p;

  std::map<std::string, std::uint8_t> part_of_unit;
  for (std::size_t i = 0; i < s.units.size(); ++i) part_of_unit[s.units[i]] = s.unit_partition[i];
  const auto node_unit = unit_of_nodes(graph.nodes);
  s.edge_partition.resize(graph.edges.size());
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const Edge& e = graph.edges[i];
    const auto ph = part_of_unit.at(node_unit[e.head]);
    const auto pt = part_of_unit.at(node_unit[e.tail]);
    s.edge_partition[i] = ph == pt ? ph : 0;  // cross-partition edges train only
  }
  return s;
}

void save_split(const Split& s, const fs::path& file) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(s.mode);
  j["ratios"] = s.ratios;
  j["seed"] = s.seed;
  j["names"] = s.names;
  j["units"] = s.units;
  j["unit_partition"] = s.unit_partition;
  j["edge_partition"] = s.edge_partition;
  write_file_atomic(file, j.dump() + "\n");
}

Split load_split(const fs::path& file, std::size_t num_edges) {
  if (!fs::exists(file)) fail(ErrorKind::io, "no split file " + file.string());
  Split s;
  try {
    const json j = json::parse(read_file(file));
    s.mode = parse_split_mode(j.at("mode").get<std::string>());
    s.ratios = j.at("ratios").get<std::array<double, 3>>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.names = j.at("names").get<std::array<std::string, 3>>();
    s.units = j.at("units").get<std::vector<std::string>>();
    s.unit_partition = j.at("unit_partition").get<std::vector<std::uint8_t>>();
    s.edge_partition = j.at("edge_partition").get<std::vector<std::uint8_t>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::corrupt_store, file.string() + ": " + e.what());
  }
  if (s.edge_partition.size() != num_edges ||
      std::any_of(s.edge_partition.begin(), s.edge_partition.end(),
                  [](std::uint8_t p) { return p > 2; }))
    fail(ErrorKind::corrupt_store, file.string() + ": edge partition does not fit graph");
  return s;
}

// ---------------------------------------------------------------------------
// Statistics

std::string_view degree_bucket_label(std::size_t bucket) {
  static constexpr std::array<std::string_view, kDegreeBuckets> kLabels = {
      "0,1", "2,3", "4,5", "6,7", "8,9", "10,11", "12,13", "14,15", "16,17", ">=18"};
  return kLabels.at(bucket);
}

Stats compute_stats(const Graph& graph) {
  Stats s;
  s.num_nodes = graph.num_nodes();
  s.num_edges = graph.num_triples();
  s.view_histogram = view_counts(graph);

  std::vector<std::size_t> degree(s.num_nodes, 0);
  for (const Edge& e : graph.edges) {
    ++degree[e.head];
    ++degree[e.tail];
    ++s.edge_code_histogram[e.code];
  }

  std::array<std::map<std::string, std::size_t>, kDegreeBuckets> kinds_in_bucket;
  std::size_t degree_sum = 0;
  for (const Node& n : graph.nodes.nodes) {
    ++s.node_kind_histogram[std::string(n.kind())];
    const std::size_t d = degree[n.id];
    degree_sum += d;
    const std::size_t b = std::min(d / 2, kDegreeBuckets - 1);
    ++s.degree_buckets[b];
    ++kinds_in_bucket[b][std::string(n.kind())];
  }
  for (std::size_t b = 0; b < kDegreeBuckets; ++b) {
    std::size_t best = 0;
    for (const auto& [kind, count] : kinds_in_bucket[b])
      if (count > best) {  // map order breaks ties alphabetically
        best = count;
        s.bucket_main_kind[b] = kind;
      }
  }
  if (s.num_nodes > 0) {
    s.rho_mean = static_cast<double>(degree_sum) / static_cast<double>(s.num_nodes);
    double weighted = 0.0;
    for (std::size_t b = 0; b < kDegreeBuckets; ++b) {
      const double mid = b + 1 < kDegreeBuckets ? 2.0 * b + 0.5 : 18.0;
      weighted += mid * static_cast<double>(s.degree_buckets[b]);
    }
    s.rho_bucket_estimate = weighted / static_cast<double>(s.num_nodes);
  }
  return s;
}

std::vector<SweepPoint> tau_sweep(const Graph& graph, const std::vector<double>& taus) {
  if (taus.empty()) fail(ErrorKind::invalid_argument, "tau_sweep: empty tau list");
  if (!std::is_sorted(taus.begin(), taus.end()))
    fail(ErrorKind::invalid_argument, "tau_sweep: taus must be sorted ascending");

  std::size_t top_k = 0;
  if (auto it = graph.provenance.find("sim_top_k"); it != graph.provenance.end())
    top_k = std::stoull(it->second);
  const std::size_t base = static_cast<std::size_t>(
      std::count_if(graph.edges.begin(), graph.edges.end(),
                    [](const Edge& e) { return !is_similarity_code(e.code); }));

  std::vector<SweepPoint> out;
  for (double tau : taus) {
    const auto sim = build_similarity_edges(graph.nodes, {tau, top_k});
    SweepPoint p;
    p.tau = tau;
    p.similarity_edges = sim.size();
    const std::size_t n = graph.num_nodes();
    p.rho_mean = n == 0 ? 0.0
                        : 2.0 * static_cast<double>(base + sim.size()) /
                              static_cast<double>(n);
    out.push_back(p);
  }
  return out;
}

}  // namespace uknow
