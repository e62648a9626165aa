#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uknow/construct.hpp"
#include "uknow/corpus.hpp"
#include "uknow/error.hpp"

namespace test {

// Kind of the uknow::Error thrown by f, or nullopt when f returns.
inline std::optional<uknow::ErrorKind> error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const uknow::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

#define CHECK_FAILS_WITH(expr, kind) \
  CHECK(::test::error_kind([&] { (void)(expr); }) == std::optional(kind))

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("uknow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path toy_dir() { return std::filesystem::path(UKNOW_DATA_DIR) / "toy"; }

inline uknow::NewsRecord news(uknow::FactId id, std::string title, std::string content,
                              std::vector<std::string> images = {},
                              std::vector<std::string> descs = {},
                              std::string coarse = "Others", std::string fine = "",
                              std::string time = "2020-01-01") {
  uknow::NewsRecord r;
  r.fact_id = id;
  r.title = std::move(title);
  r.content = std::move(content);
  r.time = std::move(time);
  r.image_paths = std::move(images);
  r.image_descriptions = descs.empty() ? std::vector<std::string>(r.image_paths.size()) : descs;
  r.event_description = r.title;
  r.event_coarse = std::move(coarse);
  r.event_fine = std::move(fine);
  return r;
}

// Graph over `n` bare fact-less nodes with the given undirected edges.
inline uknow::Graph bare_graph(std::size_t n,
                               const std::vector<std::pair<uknow::NodeIndex, uknow::NodeIndex>>& links,
                               uknow::EdgeCode code = uknow::codes::kSameEventFact) {
  uknow::NodeTable table;
  for (std::size_t i = 0; i < n; ++i) {
    uknow::Node node;
    node.id = static_cast<uknow::NodeIndex>(i);
    node.origin.id = i;
    table.nodes.push_back(node);
  }
  std::vector<uknow::Edge> edges;
  for (auto [a, b] : links) edges.push_back({a, code, b, 1.0});
  std::vector<std::vector<uknow::Edge>> lists{edges};
  return uknow::assemble_graph(std::move(table), lists, 0.8, 0);
}

inline uknow::Graph star_graph() {
  return bare_graph(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
}

}  // namespace test
