#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "uknow/construct.hpp"

namespace uknow {

inline constexpr int kGraphFormatVersion = 1;
inline constexpr std::string_view kEmbeddingMagic = "UKNOWEMB";

// Directory layout: meta.json, nodes.jsonl, edges.jsonl, embeddings.bin and
// optionally splits/<name>.json. meta.json carries SHA-256 digests of the
// other three files.
void save_graph(const Graph& graph, const std::filesystem::path& dir);
Graph load_graph(const std::filesystem::path& dir);

enum class SplitMode { fact, triple };

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view text);

struct Split {
  SplitMode mode = SplitMode::triple;
  std::array<double, 3> ratios{0.8, 0.15, 0.05};
  std::uint64_t seed = 0;
  std::array<std::string, 3> names{"train", "val", "test"};
  // Fact mode: owner units ("fact:<id>" / "pair:<id>") and their partition.
  std::vector<std::string> units;
  std::vector<std::uint8_t> unit_partition;
  // Partition of every graph edge, parallel to Graph::edges.
  std::vector<std::uint8_t> edge_partition;

  std::size_t count(std::uint8_t partition) const;
  std::vector<Edge> edges_of(const Graph& graph, std::uint8_t partition) const;
  std::uint8_t partition_index(std::string_view name) const;

  bool operator==(const Split&) const = default;
};

// Partition sizes for n units: floor(r_i n), with the leftover units handed
// to the largest fractional remainders (lower index wins ties).
std::array<std::size_t, 3> largest_remainder_sizes(std::size_t n,
                                                   const std::array<double, 3>& ratios);

Split split_graph(const Graph& graph, const std::array<double, 3>& ratios,
                  SplitMode mode, std::uint64_t seed,
                  const std::array<std::string, 3>& names = {"train", "val", "test"});

void save_split(const Split& split, const std::filesystem::path& file);
Split load_split(const std::filesystem::path& file, std::size_t num_edges);

inline constexpr std::size_t kDegreeBuckets = 10;

struct Stats {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::map<std::string, std::size_t> node_kind_histogram;
  std::map<int, std::size_t> edge_code_histogram;
  std::map<View, std::size_t> view_histogram;
  // degree ranges {0-1, 2-3, ..., 16-17, >=18}
  std::array<std::size_t, kDegreeBuckets> degree_buckets{};
  std::array<std::string, kDegreeBuckets> bucket_main_kind{};
  double rho_mean = 0.0;  // exact average degree
  // bucket-weighted estimate: midpoint of each range (18 for the last)
  // weighted by the bucket's node count
  double rho_bucket_estimate = 0.0;
};

std::string_view degree_bucket_label(std::size_t bucket);

Stats compute_stats(const Graph& graph);

struct SweepPoint {
  double tau = 0.0;
  std::size_t similarity_edges = 0;
  double rho_mean = 0.0;
};

// Rebuilds the similarity views of the graph at each threshold; non-similarity
// edges are kept as they are.
std::vector<SweepPoint> tau_sweep(const Graph& graph, const std::vector<double>& taus);

}  // namespace uknow
