#include "uknow/features.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "json.hpp"
#include "uknow/rng.hpp"

namespace uknow {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDetectSalt = 0x6465746563740000ULL;  // "detect"
constexpr std::uint64_t kNerSalt = 0x6e65720000000000ULL;     // "ner"

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

unsigned char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<unsigned char>(c + 32) : c;
}

void add_token_vector(Eigen::VectorXd& acc, std::string_view token,
                      std::uint64_t seed) {
  Rng rng(keyed_hash(token, seed));
  for (Eigen::Index i = 0; i < acc.size(); ++i) acc[i] += rng.normal();
}

std::size_t count_code_points(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr, std::size_t line_no) {
  if (!arr.is_array())
    fail(ErrorKind::schema,
         "line " + std::to_string(line_no) + ": embedding must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      fail(ErrorKind::schema,
           "line " + std::to_string(line_no) + ": non-numeric embedding entry");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  if (!v.allFinite())
    fail(ErrorKind::schema,
         "line " + std::to_string(line_no) + ": non-finite embedding entry");
  return v;
}

// Owners that exist in a corpus.
class OwnerIndex {
 public:
  explicit OwnerIndex(const Corpus& corpus) {
    for (const auto& n : corpus.news) {
      std::vector<bool> described;
      for (const auto& d : n.image_descriptions) described.push_back(!d.empty());
      facts_.emplace(n.fact_id, std::move(described));
    }
    for (const auto& p : corpus.pairs) pairs_.insert(p.pair_id);
  }

  bool contains(const FeatureOwner& o) const {
    if (o.kind == OwnerKind::pair) {
      if (!pairs_.count(o.id)) return false;
      return (o.selector == Selector::pair_text ||
              o.selector == Selector::pair_image) &&
             o.slot == 0;
    }
    auto it = facts_.find(o.id);
    if (it == facts_.end()) return false;
    switch (o.selector) {
      case Selector::title:
      case Selector::content:
        return o.slot == 0;
      case Selector::image:
        return o.slot < it->second.size();
      case Selector::image_desc:
        return o.slot < it->second.size() && it->second[o.slot];
      default:
        return false;
    }
  }

 private:
  std::map<FactId, std::vector<bool>> facts_;
  std::set<PairId> pairs_;
};

}  // namespace

std::string_view selector_name(Selector s) {
  switch (s) {
    case Selector::title: return "title";
    case Selector::content: return "content";
    case Selector::image: return "image";
    case Selector::image_desc: return "image_desc";
    case Selector::pair_text: return "pair_text";
    case Selector::pair_image: return "pair_image";
  }
  return "?";
}

std::string FeatureOwner::selector_string() const {
  std::string out(selector_name(selector));
  if (selector == Selector::image || selector == Selector::image_desc)
    out += "[" + std::to_string(slot) + "]";
  return out;
}

std::pair<Selector, std::uint32_t> parse_selector(std::string_view text) {
  static constexpr std::array<Selector, 6> kAll = {
      Selector::title,      Selector::content,   Selector::image,
      Selector::image_desc, Selector::pair_text, Selector::pair_image};
  std::string_view name = text;
  std::uint32_t slot = 0;
  bool indexed = false;
  if (auto lb = text.find('['); lb != std::string_view::npos) {
    if (text.back() != ']')
      fail(ErrorKind::schema, "bad selector '" + std::string(text) + "'");
    name = text.substr(0, lb);
    auto digits = text.substr(lb + 1, text.size() - lb - 2);
    auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), slot);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty())
      fail(ErrorKind::schema, "bad selector index in '" + std::string(text) + "'");
    indexed = true;
  }
  for (Selector s : kAll) {
    if (selector_name(s) != name) continue;
    const bool wants_index = s == Selector::image || s == Selector::image_desc;
    if (wants_index != indexed)
      fail(ErrorKind::schema, "bad selector '" + std::string(text) + "'");
    return {s, slot};
  }
  fail(ErrorKind::schema, "unknown selector '" + std::string(text) + "'");
}

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::embedding: return "embedding";
    case FeatureKind::detection: return "detection";
    case FeatureKind::entity: return "entity";
    case FeatureKind::caption: return "caption";
  }
  return "?";
}

FeatureStore::FeatureStore(std::vector<FeatureRecord> records)
    : records_(std::move(records)) {
  auto check_dim = [this](const Eigen::VectorXd& v) {
    if (v.size() == 0) return;
    const auto n = static_cast<std::size_t>(v.size());
    if (dim_ == 0) dim_ = n;
    if (n != dim_)
      fail(ErrorKind::schema, "embedding dimension " + std::to_string(n) +
                                  " differs from " + std::to_string(dim_));
  };
  for (const auto& r : records_) {
    Entry& e = index_[r.owner];
    switch (r.kind) {
      case FeatureKind::embedding: {
        const auto& v = std::get<Eigen::VectorXd>(r.payload);
        if (v.size() == 0) fail(ErrorKind::schema, "empty embedding");
        check_dim(v);
        if (e.embedding)
          fail(ErrorKind::schema, "duplicate embedding for " +
                                      std::to_string(r.owner.id) + "/" +
                                      r.owner.selector_string());
        e.embedding = v;
        break;
      }
      case FeatureKind::detection:
        for (const auto& d : std::get<std::vector<Detection>>(r.payload)) {
          check_dim(d.crop_embedding);
          e.detections.push_back(d);
        }
        break;
      case FeatureKind::entity:
        for (const auto& m : std::get<std::vector<EntityMention>>(r.payload)) {
          check_dim(m.embedding);
          e.entities.push_back(m);
        }
        break;
      case FeatureKind::caption:
        e.caption = std::get<std::string>(r.payload);
        break;
    }
  }
}

const Eigen::VectorXd* FeatureStore::embedding(const FeatureOwner& owner) const {
  auto it = index_.find(owner);
  if (it == index_.end() || !it->second.embedding) return nullptr;
  return &*it->second.embedding;
}

std::span<const Detection> FeatureStore::detections(const FeatureOwner& owner) const {
  auto it = index_.find(owner);
  if (it == index_.end()) return {};
  return it->second.detections;
}

std::span<const EntityMention> FeatureStore::entities(const FeatureOwner& owner) const {
  auto it = index_.find(owner);
  if (it == index_.end()) return {};
  return it->second.entities;
}

const std::string* FeatureStore::caption(const FeatureOwner& owner) const {
  auto it = index_.find(owner);
  if (it == index_.end() || !it->second.caption) return nullptr;
  return &*it->second.caption;
}

Eigen::VectorXd stub_featurize(std::string_view content, std::size_t dim,
                               std::uint64_t seed) {
  if (dim == 0) fail(ErrorKind::invalid_argument, "stub_featurize: dim must be >= 1");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  std::string token;
  bool any = false;
  auto flush = [&] {
    if (token.empty()) return;
    add_token_vector(acc, token, seed);
    token.clear();
    any = true;
  };
  for (unsigned char c : content) {
    if (is_token_byte(c))
      token += static_cast<char>(lower(c));
    else
      flush();
  }
  flush();
  if (!any) add_token_vector(acc, content, seed);
  // Cancellation to an exact zero sum needs identical-and-opposite normal
  // streams; fall back to the raw-bytes vector if it ever happens.
  double norm = acc.norm();
  if (norm == 0.0) {
    acc.setZero();
    add_token_vector(acc, content, seed ^ 1);
    norm = acc.norm();
  }
  return acc / norm;
}

std::vector<Detection> stub_detect(std::string_view image_content,
                                   std::size_t dim, std::uint64_t seed) {
  const std::size_t n = keyed_hash(image_content, seed ^ kDetectSalt) % 4;
  std::vector<Detection> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string key =
        std::string(image_content) + "#det" + std::to_string(i);
    Rng rng(keyed_hash(key, seed ^ kDetectSalt));
    Detection d;
    d.class_index = static_cast<int>(rng.below(kDetectionClasses));
    const double x0 = rng.uniform(0.0, 0.6);
    const double y0 = rng.uniform(0.0, 0.6);
    d.box = {x0, y0, x0 + rng.uniform(0.1, 0.4), y0 + rng.uniform(0.1, 0.4)};
    d.crop_embedding = stub_featurize(key, dim, seed);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<EntityMention> stub_entities(std::string_view text, std::size_t dim,
                                         std::uint64_t seed) {
  // Maximal runs of capitalized words joined by single spaces.
  std::vector<EntityMention> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto word_end = [&](std::size_t from) {
    std::size_t j = from;
    while (j < n && (is_token_byte(static_cast<unsigned char>(text[j])) ||
                     text[j] == '-' || text[j] == '\''))
      ++j;
    return j;
  };
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    const bool starts_word =
        is_token_byte(c) &&
        (i == 0 || !is_token_byte(static_cast<unsigned char>(text[i - 1])));
    if (!starts_word) {
      ++i;
      continue;
    }
    if (!(c >= 'A' && c <= 'Z')) {
      i = word_end(i);
      continue;
    }
    const std::size_t begin = i;
    std::size_t end = word_end(i);
    while (end + 1 < n && text[end] == ' ' && text[end + 1] >= 'A' &&
           text[end + 1] <= 'Z')
      end = word_end(end + 1);
    if (end - begin >= 3) {
      EntityMention m;
      m.surface = std::string(text.substr(begin, end - begin));
      m.ner_index = static_cast<int>(keyed_hash(m.surface, seed ^ kNerSalt) %
                                     kNerClasses);
      m.span_begin = count_code_points(text.substr(0, begin));
      m.span_end = m.span_begin + count_code_points(m.surface);
      m.embedding = stub_featurize(m.surface, dim, seed);
      out.push_back(std::move(m));
    }
    i = end;
  }
  return out;
}

std::vector<FeatureRecord> stub_feature_records(const Corpus& corpus,
                                                std::size_t dim,
                                                std::uint64_t seed) {
  std::vector<FeatureRecord> out;
  auto text_owner = [&](const FeatureOwner& owner, std::string_view text) {
    out.push_back({owner, FeatureKind::embedding, stub_featurize(text, dim, seed)});
    auto ents = stub_entities(text, dim, seed);
    if (!ents.empty()) out.push_back({owner, FeatureKind::entity, std::move(ents)});
  };
  auto image_owner = [&](const FeatureOwner& owner, std::string_view path) {
    out.push_back({owner, FeatureKind::embedding, stub_featurize(path, dim, seed)});
    auto dets = stub_detect(path, dim, seed);
    if (!dets.empty())
      out.push_back({owner, FeatureKind::detection, std::move(dets)});
  };

  std::vector<const NewsRecord*> news;
  for (const auto& n : corpus.news) news.push_back(&n);
  std::sort(news.begin(), news.end(),
            [](auto* a, auto* b) { return a->fact_id < b->fact_id; });
  for (const NewsRecord* n : news) {
    text_owner({OwnerKind::fact, n->fact_id, Selector::title, 0}, n->title);
    text_owner({OwnerKind::fact, n->fact_id, Selector::content, 0}, n->content);
    for (std::uint32_t k = 0; k < n->image_paths.size(); ++k)
      image_owner({OwnerKind::fact, n->fact_id, Selector::image, k},
                  n->image_paths[k]);
    for (std::uint32_t k = 0; k < n->image_descriptions.size(); ++k)
      if (!n->image_descriptions[k].empty())
        text_owner({OwnerKind::fact, n->fact_id, Selector::image_desc, k},
                   n->image_descriptions[k]);
  }
  std::vector<const PairRecord*> pairs;
  for (const auto& p : corpus.pairs) pairs.push_back(&p);
  std::sort(pairs.begin(), pairs.end(),
            [](auto* a, auto* b) { return a->pair_id < b->pair_id; });
  for (const PairRecord* p : pairs) {
    text_owner({OwnerKind::pair, p->pair_id, Selector::pair_text, 0}, p->text);
    image_owner({OwnerKind::pair, p->pair_id, Selector::pair_image, 0},
                p->image_path);
  }
  return out;
}

std::string serialize_feature_record(const FeatureRecord& r) {
  nlohmann::ordered_json owner;
  owner[r.owner.kind == OwnerKind::fact ? "fact_id" : "pair_id"] = r.owner.id;
  owner["selector"] = r.owner.selector_string();

  nlohmann::ordered_json obj;
  obj["owner"] = owner;
  obj["kind"] = to_string(r.kind);
  switch (r.kind) {
    case FeatureKind::embedding:
      obj["payload"] = vector_to_json(std::get<Eigen::VectorXd>(r.payload));
      break;
    case FeatureKind::detection: {
      json arr = json::array();
      for (const auto& d : std::get<std::vector<Detection>>(r.payload)) {
        json item = {{"class_index", d.class_index},
                     {"box", {d.box[0], d.box[1], d.box[2], d.box[3]}}};
        if (d.crop_embedding.size() > 0)
          item["crop_embedding"] = vector_to_json(d.crop_embedding);
        arr.push_back(std::move(item));
      }
      obj["payload"] = std::move(arr);
      break;
    }
    case FeatureKind::entity: {
      json arr = json::array();
      for (const auto& m : std::get<std::vector<EntityMention>>(r.payload)) {
        json item = {{"surface", m.surface},
                     {"ner_index", m.ner_index},
                     {"span", {m.span_begin, m.span_end}}};
        if (m.embedding.size() > 0) item["embedding"] = vector_to_json(m.embedding);
        arr.push_back(std::move(item));
      }
      obj["payload"] = std::move(arr);
      break;
    }
    case FeatureKind::caption:
      obj["payload"] = std::get<std::string>(r.payload);
      break;
  }
  return obj.dump();
}

std::string serialize_feature_manifest(const std::vector<FeatureRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_feature_record(r);
    out += '\n';
  }
  return out;
}

FeatureStore parse_feature_manifest(std::string_view text, const Corpus& corpus) {
  const OwnerIndex owners(corpus);
  std::vector<FeatureRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::schema, where + e.what());
    }
    FeatureRecord rec;
    try {
      const json& o = obj.at("owner");
      if (o.contains("fact_id")) {
        rec.owner.kind = OwnerKind::fact;
        rec.owner.id = o.at("fact_id").get<std::uint64_t>();
      } else {
        rec.owner.kind = OwnerKind::pair;
        rec.owner.id = o.at("pair_id").get<std::uint64_t>();
      }
      std::tie(rec.owner.selector, rec.owner.slot) =
          parse_selector(o.at("selector").get<std::string>());

      const auto kind = obj.at("kind").get<std::string>();
      const json& payload = obj.at("payload");
      if (kind == "embedding") {
        rec.kind = FeatureKind::embedding;
        rec.payload = vector_from_json(payload, line_no);
      } else if (kind == "detection") {
        rec.kind = FeatureKind::detection;
        std::vector<Detection> dets;
        for (const json& item : payload) {
          Detection d;
          d.class_index = item.at("class_index").get<int>();
          if (d.class_index < 0 || d.class_index >= kDetectionClasses)
            fail(ErrorKind::schema, where + "class_index out of [0,79]");
          const auto box = item.at("box").get<std::vector<double>>();
          if (box.size() != 4)
            fail(ErrorKind::schema, where + "box needs 4 reals");
          std::copy(box.begin(), box.end(), d.box.begin());
          if (!(d.box[0] < d.box[2] && d.box[1] < d.box[3]) ||
              std::any_of(box.begin(), box.end(),
                          [](double x) { return !(x >= 0.0 && x <= 1.0); }))
            fail(ErrorKind::schema, where + "box must satisfy 0<=x0<x1<=1, 0<=y0<y1<=1");
          if (item.contains("crop_embedding"))
            d.crop_embedding = vector_from_json(item["crop_embedding"], line_no);
          dets.push_back(std::move(d));
        }
        rec.payload = std::move(dets);
      } else if (kind == "entity") {
        rec.kind = FeatureKind::entity;
        std::vector<EntityMention> ents;
        for (const json& item : payload) {
          EntityMention m;
          m.surface = item.at("surface").get<std::string>();
          m.ner_index = item.at("ner_index").get<int>();
          if (m.ner_index < 0 || m.ner_index >= kNerClasses)
            fail(ErrorKind::schema, where + "ner_index out of [0,17]");
          const auto span = item.at("span").get<std::vector<std::size_t>>();
          if (span.size() != 2 || span[0] > span[1])
            fail(ErrorKind::schema, where + "span must be [start, end)");
          m.span_begin = span[0];
          m.span_end = span[1];
          if (item.contains("embedding"))
            m.embedding = vector_from_json(item["embedding"], line_no);
          ents.push_back(std::move(m));
        }
        rec.payload = std::move(ents);
      } else if (kind == "caption") {
        rec.kind = FeatureKind::caption;
        rec.payload = payload.get<std::string>();
      } else {
        fail(ErrorKind::schema, where + "unknown kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      fail(ErrorKind::schema, where + e.what());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::schema) throw;
      const std::string msg = e.what();
      fail(ErrorKind::schema, msg.rfind("line ", 0) == 0 ? msg : where + msg);
    }

    if (!owners.contains(rec.owner))
      fail(ErrorKind::dangling_owner,
           where + "owner " +
               (rec.owner.kind == OwnerKind::fact ? "fact_id " : "pair_id ") +
               std::to_string(rec.owner.id) + "/" + rec.owner.selector_string() +
               " is not in the corpus");
    const bool image_owner = rec.owner.is_image();
    if (rec.kind == FeatureKind::detection && !image_owner)
      fail(ErrorKind::schema, where + "detections attach to image owners only");
    if (rec.kind == FeatureKind::entity && image_owner)
      fail(ErrorKind::schema, where + "entities attach to text owners only");
    records.push_back(std::move(rec));
  }
  return FeatureStore(std::move(records));
}

FeatureStore load_feature_manifest(const std::filesystem::path& path,
                                   const Corpus& corpus) {
  return parse_feature_manifest(std::string_view(read_file(path)), corpus);
}

}  // namespace uknow
