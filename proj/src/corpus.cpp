#include "uknow/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uknow/error.hpp"

namespace uknow {

using nlohmann::json;

namespace {

// Calls fn(line, line_number) for every line, without the trailing newline.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    fn(line, line_no);
    pos = end + 1;
  }
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r';
  });
}

template <typename T>
T required(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end())
    fail(ErrorKind::schema,
         "line " + std::to_string(line_no) + ": missing key '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::schema,
         "line " + std::to_string(line_no) + ": wrong type for '" + key + "'");
  }
}

}  // namespace

std::string NewsRecord::event() const {
  if (event_fine.empty()) return event_coarse;
  return event_coarse + std::string(kEventArrow) + event_fine;
}

bool is_event_category(std::string_view name) {
  return std::find(kEventCategories.begin(), kEventCategories.end(), name) !=
         kEventCategories.end();
}

std::pair<std::string, std::string> split_event(std::string_view event) {
  std::string_view coarse = event;
  std::string_view fine;
  if (auto at = event.find(kEventArrow); at != std::string_view::npos) {
    coarse = event.substr(0, at);
    fine = event.substr(at + kEventArrow.size());
  } else if (auto ascii = event.find("->"); ascii != std::string_view::npos) {
    coarse = event.substr(0, ascii);
    fine = event.substr(ascii + 2);
  }
  if (!is_event_category(coarse))
    fail(ErrorKind::invalid_event,
         "unknown coarse event label '" + std::string(coarse) + "'");
  return {std::string(coarse), std::string(fine)};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "read failure on " + path.string());
  return std::move(buf).str();
}

std::vector<PairRecord> parse_pair_manifest(std::string_view text) {
  std::vector<PairRecord> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty()) return;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      fail(ErrorKind::malformed_line,
           "line " + std::to_string(line_no) + ": expected <text>\\t<path>");
    PairRecord rec;
    rec.pair_id = out.size();
    rec.text = std::string(line.substr(0, tab));
    rec.image_path = std::string(line.substr(tab + 1));
    if (rec.text.empty())
      fail(ErrorKind::malformed_line,
           "line " + std::to_string(line_no) + ": empty text");
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<PairRecord> parse_pair_manifest(const std::filesystem::path& path) {
  return parse_pair_manifest(std::string_view(read_file(path)));
}

NewsRecord parse_news_line(std::string_view line) {
  return parse_news_manifest(line).at(0);
}

std::vector<NewsRecord> parse_news_manifest(std::string_view text) {
  std::vector<NewsRecord> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (is_blank(line)) return;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::malformed_line,
           "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object())
      fail(ErrorKind::schema,
           "line " + std::to_string(line_no) + ": expected a JSON object");

    NewsRecord rec;
    rec.fact_id = required<FactId>(obj, "fact_id", line_no);
    rec.title = required<std::string>(obj, "title", line_no);
    rec.content = required<std::string>(obj, "content", line_no);
    rec.time = required<std::string>(obj, "time", line_no);
    rec.image_paths =
        required<std::vector<std::string>>(obj, "image_paths", line_no);
    rec.image_descriptions =
        required<std::vector<std::string>>(obj, "image_descriptions", line_no);
    rec.event_description =
        required<std::string>(obj, "event_description", line_no);
    rec.event_attributes = required<std::map<std::string, std::string>>(
        obj, "event_attributes", line_no);
    if (rec.image_paths.size() != rec.image_descriptions.size())
      fail(ErrorKind::schema, "line " + std::to_string(line_no) +
                                  ": image_paths and image_descriptions "
                                  "differ in length");
    const auto event = required<std::string>(obj, "event", line_no);
    try {
      std::tie(rec.event_coarse, rec.event_fine) = split_event(event);
    } catch (const Error& e) {
      fail(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<NewsRecord> parse_news_manifest(const std::filesystem::path& path) {
  return parse_news_manifest(std::string_view(read_file(path)));
}

std::string serialize_pair_manifest(const std::vector<PairRecord>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += p.text;
    out += '\t';
    out += p.image_path;
    out += '\n';
  }
  return out;
}

std::string serialize_news_record(const NewsRecord& r) {
  // ordered_json keeps the documented key order in the output
  nlohmann::ordered_json obj;
  obj["fact_id"] = r.fact_id;
  obj["title"] = r.title;
  obj["content"] = r.content;
  obj["time"] = r.time;
  obj["image_paths"] = r.image_paths;
  obj["image_descriptions"] = r.image_descriptions;
  obj["event_description"] = r.event_description;
  obj["event"] = r.event();
  obj["event_attributes"] = r.event_attributes;
  return obj.dump();
}

std::string serialize_news_manifest(const std::vector<NewsRecord>& news) {
  std::string out;
  for (const auto& r : news) {
    out += serialize_news_record(r);
    out += '\n';
  }
  return out;
}

CorpusSummary validate_corpus(const std::vector<PairRecord>& pairs,
                              const std::vector<NewsRecord>& news) {
  auto check_unique = [](const auto& records, auto id_of, const char* what) {
    std::set<std::uint64_t> seen;
    std::set<std::uint64_t> dup;
    for (const auto& r : records)
      if (!seen.insert(id_of(r)).second) dup.insert(id_of(r));
    if (!dup.empty()) {
      std::string msg = std::string("duplicate ") + what + ":";
      for (auto id : dup) msg += " " + std::to_string(id);
      fail(ErrorKind::duplicate_id, msg);
    }
  };
  check_unique(pairs, [](const PairRecord& p) { return p.pair_id; }, "pair_id");
  check_unique(news, [](const NewsRecord& n) { return n.fact_id; }, "fact_id");

  CorpusSummary s;
  s.n_pairs = pairs.size();
  s.n_news = news.size();
  s.n_images = pairs.size();
  s.n_texts = pairs.size();
  for (const auto& n : news) {
    if (!is_event_category(n.event_coarse))
      fail(ErrorKind::invalid_event,
           "fact " + std::to_string(n.fact_id) + ": unknown coarse label '" +
               n.event_coarse + "'");
    if (n.image_paths.size() != n.image_descriptions.size())
      fail(ErrorKind::schema, "fact " + std::to_string(n.fact_id) +
                                  ": image/description length mismatch");
    s.n_images += n.image_paths.size();
    s.n_texts += 2;  // title + content
    for (const auto& d : n.image_descriptions)
      if (!d.empty()) ++s.n_texts;
    ++s.event_histogram[n.event_coarse];
  }
  return s;
}

Corpus load_corpus_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    fail(ErrorKind::io, "corpus directory not found: " + dir.string());
  Corpus c;
  const auto pairs = dir / "pairs.tsv";
  const auto news = dir / "news.jsonl";
  if (!fs::exists(pairs) && !fs::exists(news))
    fail(ErrorKind::io, "corpus directory " + dir.string() +
                            " holds neither pairs.tsv nor news.jsonl");
  if (fs::exists(pairs)) c.pairs = parse_pair_manifest(pairs);
  if (fs::exists(news)) c.news = parse_news_manifest(news);
  return c;
}

}  // namespace uknow
