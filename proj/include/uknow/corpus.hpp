#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace uknow {

using FactId = std::uint64_t;
using PairId = std::uint64_t;

// An image-text pair from a `<text>\t<path>` manifest line.
struct PairRecord {
  PairId pair_id = 0;
  std::string text;
  std::string image_path;

  bool operator==(const PairRecord&) const = default;
};

// One curated news item with its hierarchical event label.
struct NewsRecord {
  FactId fact_id = 0;
  std::string title;
  std::string content;
  std::string time;  // ISO-8601 date
  std::vector<std::string> image_paths;
  std::vector<std::string> image_descriptions;
  std::string event_description;
  std::string event_coarse;
  std::string event_fine;  // empty when the label has no fine level
  std::map<std::string, std::string> event_attributes;

  // Canonical hierarchical label, "coarse→fine" or just "coarse".
  std::string event() const;

  bool operator==(const NewsRecord&) const = default;
};

struct CorpusSummary {
  std::size_t n_pairs = 0;
  std::size_t n_news = 0;
  std::size_t n_images = 0;
  std::size_t n_texts = 0;
  std::map<std::string, std::size_t> event_histogram;

  bool operator==(const CorpusSummary&) const = default;
};

struct Corpus {
  std::vector<PairRecord> pairs;
  std::vector<NewsRecord> news;
};

// The eleven coarse event categories, in table order.
inline constexpr std::array<std::string_view, 11> kEventCategories = {
    "Armed conflicts and attacks", "Arts and culture",
    "Business and economy",        "Disasters and accidents",
    "Health and environment",      "International relations",
    "Sports",                      "Law and crime",
    "Politics and elections",      "Science and technology",
    "Others",
};

inline constexpr std::string_view kEventArrow = "\xE2\x86\x92";  // U+2192

bool is_event_category(std::string_view name);

// Splits "A→B" (or "A->B") into its coarse and fine parts and checks the
// coarse label against kEventCategories.
std::pair<std::string, std::string> split_event(std::string_view event);

std::vector<PairRecord> parse_pair_manifest(std::string_view text);
std::vector<PairRecord> parse_pair_manifest(const std::filesystem::path& path);

NewsRecord parse_news_line(std::string_view line);
std::vector<NewsRecord> parse_news_manifest(std::string_view text);
std::vector<NewsRecord> parse_news_manifest(const std::filesystem::path& path);

std::string serialize_pair_manifest(const std::vector<PairRecord>& pairs);
std::string serialize_news_record(const NewsRecord& record);
std::string serialize_news_manifest(const std::vector<NewsRecord>& news);

CorpusSummary validate_corpus(const std::vector<PairRecord>& pairs,
                              const std::vector<NewsRecord>& news);

// Reads a corpus directory holding `pairs.tsv` and/or `news.jsonl`.
Corpus load_corpus_dir(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);

}  // namespace uknow
