#include "uknow/symbolize.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "uknow/rng.hpp"

namespace uknow {

using nlohmann::json;

std::string_view to_string(Level level) {
  switch (level) {
    case Level::L1: return "L1";
    case Level::L2: return "L2";
    case Level::L3: return "L3";
  }
  return "?";
}

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::fact: return "fact";
    case Modality::image: return "image";
    case Modality::text: return "text";
    case Modality::object: return "object";
    case Modality::entity: return "entity";
  }
  return "?";
}

Level parse_level(std::string_view text) {
  if (text == "L1") return Level::L1;
  if (text == "L2") return Level::L2;
  if (text == "L3") return Level::L3;
  fail(ErrorKind::schema, "unknown level '" + std::string(text) + "'");
}

Modality parse_modality(std::string_view text) {
  for (auto m : {Modality::fact, Modality::image, Modality::text,
                 Modality::object, Modality::entity})
    if (to_string(m) == text) return m;
  fail(ErrorKind::schema, "unknown modality '" + std::string(text) + "'");
}

std::string Origin::to_string() const {
  std::string out = owner == OwnerKind::fact ? "fact:" : "pair:";
  out += std::to_string(id);
  if (level == Level::L1) return out;
  out += "/" + feature_owner().selector_string();
  if (item >= 0) out += "#" + std::to_string(item);
  return out;
}

std::string_view Node::kind() const {
  switch (modality) {
    case Modality::fact: return "fact";
    case Modality::object: return "object";
    case Modality::entity: return "entity";
    default: return selector_name(origin.selector);
  }
}

const Node& NodeTable::at(NodeIndex id) const {
  if (id >= nodes.size())
    fail(ErrorKind::invalid_argument, "node id " + std::to_string(id) +
                                          " out of range [0, " +
                                          std::to_string(nodes.size()) + ")");
  return nodes[id];
}

Eigen::VectorXd NodeTable::embedding(NodeIndex id) const {
  const Node& n = at(id);
  if (n.embedding_row < 0) return {};
  return embeddings.row(n.embedding_row).transpose().cast<double>();
}

namespace {

// Node plus the vector that will become its embedding row.
struct Draft {
  Node node;
  Eigen::VectorXd vec;
};

json spans_json(const std::vector<std::pair<std::size_t, std::size_t>>& spans) {
  json arr = json::array();
  for (auto [b, e] : spans) arr.push_back({b, e});
  return arr;
}

std::vector<Draft> canonical_drafts(const Corpus& corpus,
                                    const FeatureStore& features) {
  std::vector<const NewsRecord*> news;
  for (const auto& n : corpus.news) news.push_back(&n);
  std::sort(news.begin(), news.end(),
            [](auto* a, auto* b) { return a->fact_id < b->fact_id; });
  std::vector<const PairRecord*> pairs;
  for (const auto& p : corpus.pairs) pairs.push_back(&p);
  std::sort(pairs.begin(), pairs.end(),
            [](auto* a, auto* b) { return a->pair_id < b->pair_id; });

  std::vector<Draft> out;
  auto push = [&out](Draft d) {
    d.node.id = static_cast<NodeIndex>(out.size());
    d.node.attrs["level"] = to_string(d.node.level);
    d.node.attrs["modality"] = to_string(d.node.modality);
    d.node.attrs["kind"] = d.node.kind();
    d.node.attrs["origin"] = d.node.origin.to_string();
    out.push_back(std::move(d));
    return out.back().node.id;
  };
  auto owner_vec = [&](const FeatureOwner& o) {
    const Eigen::VectorXd* v = features.embedding(o);
    return v ? *v : Eigen::VectorXd();
  };

  // L1
  std::map<FactId, NodeIndex> fact_node;
  for (const NewsRecord* n : news) {
    Draft d;
    d.node.level = Level::L1;
    d.node.modality = Modality::fact;
    d.node.origin = {Level::L1, OwnerKind::fact, n->fact_id, Selector::title, 0, -1};
    d.node.attrs["fact_id"] = n->fact_id;
    d.node.attrs["title"] = n->title;
    d.node.attrs["time"] = n->time;
    d.node.attrs["event_coarse"] = n->event_coarse;
    d.node.attrs["event_fine"] = n->event_fine;
    d.node.attrs["event_description"] = n->event_description;
    d.node.attrs["event_attributes"] = n->event_attributes;
    fact_node[n->fact_id] = push(std::move(d));
  }

  // L2
  auto l2 = [&](OwnerKind kind, std::uint64_t id, Selector sel, std::uint32_t slot,
                std::optional<NodeIndex> parent, json attrs) {
    Draft d;
    d.node.level = Level::L2;
    d.node.origin = {Level::L2, kind, id, sel, slot, -1};
    d.node.modality = d.node.origin.feature_owner().is_image() ? Modality::image
                                                               : Modality::text;
    d.node.parent = parent;
    d.node.attrs = std::move(attrs);
    const FeatureOwner owner = d.node.origin.feature_owner();
    d.vec = owner_vec(owner);
    if (const std::string* cap = features.caption(owner)) d.node.attrs["caption"] = *cap;
    push(std::move(d));
  };
  for (const NewsRecord* n : news) {
    const NodeIndex parent = fact_node.at(n->fact_id);
    l2(OwnerKind::fact, n->fact_id, Selector::title, 0, parent, {{"text", n->title}});
    l2(OwnerKind::fact, n->fact_id, Selector::content, 0, parent,
       {{"text", n->content}});
    for (std::uint32_t k = 0; k < n->image_paths.size(); ++k)
      l2(OwnerKind::fact, n->fact_id, Selector::image, k, parent,
         {{"path", n->image_paths[k]}, {"description", n->image_descriptions[k]}});
    for (std::uint32_t k = 0; k < n->image_descriptions.size(); ++k)
      if (!n->image_descriptions[k].empty())
        l2(OwnerKind::fact, n->fact_id, Selector::image_desc, k, parent,
           {{"text", n->image_descriptions[k]}});
  }
  for (const PairRecord* p : pairs) {
    l2(OwnerKind::pair, p->pair_id, Selector::pair_text, 0, std::nullopt,
       {{"text", p->text}});
    l2(OwnerKind::pair, p->pair_id, Selector::pair_image, 0, std::nullopt,
       {{"path", p->image_path}});
  }

  // L3, following the L2 nodes in canonical order
  const std::size_t l2_end = out.size();
  for (std::size_t i = fact_node.size(); i < l2_end; ++i) {
    const Node parent = out[i].node;
    const FeatureOwner owner = parent.origin.feature_owner();
    Origin base = parent.origin;
    base.level = Level::L3;
    if (parent.modality == Modality::image) {
      const auto dets = features.detections(owner);
      for (std::size_t k = 0; k < dets.size(); ++k) {
        Draft d;
        d.node.level = Level::L3;
        d.node.modality = Modality::object;
        d.node.origin = base;
        d.node.origin.item = static_cast<std::int32_t>(k);
        d.node.parent = parent.id;
        d.node.attrs["class_index"] = dets[k].class_index;
        d.node.attrs["box"] = dets[k].box;
        d.vec = dets[k].crop_embedding;
        push(std::move(d));
      }
    } else {
      // one node per distinct (surface, ner_index) within this text
      struct Distinct {
        const EntityMention* first;
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        Eigen::VectorXd vec;
      };
      std::vector<Distinct> distinct;
      for (const EntityMention& m : features.entities(owner)) {
        auto it = std::find_if(distinct.begin(), distinct.end(), [&](const Distinct& x) {
          return x.first->surface == m.surface && x.first->ner_index == m.ner_index;
        });
        if (it == distinct.end()) {
          distinct.push_back({&m, {}, {}});
          it = std::prev(distinct.end());
        }
        it->spans.emplace_back(m.span_begin, m.span_end);
        if (it->vec.size() == 0 && m.embedding.size() > 0) it->vec = m.embedding;
      }
      for (std::size_t k = 0; k < distinct.size(); ++k) {
        Draft d;
        d.node.level = Level::L3;
        d.node.modality = Modality::entity;
        d.node.origin = base;
        d.node.origin.item = static_cast<std::int32_t>(k);
        d.node.parent = parent.id;
        d.node.attrs["surface"] = distinct[k].first->surface;
        d.node.attrs["ner_index"] = distinct[k].first->ner_index;
        d.node.attrs["spans"] = spans_json(distinct[k].spans);
        d.vec = std::move(distinct[k].vec);
        push(std::move(d));
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Node> canonical_nodes(const Corpus& corpus, const FeatureStore& features) {
  std::vector<Node> out;
  for (auto& d : canonical_drafts(corpus, features)) out.push_back(std::move(d.node));
  return out;
}

NodeTable assign_nodes(const Corpus& corpus, const FeatureStore& features,
                       std::uint64_t seed) {
  std::vector<Draft> drafts = canonical_drafts(corpus, features);
  const std::size_t n = drafts.size();

  std::vector<NodeIndex> perm(n);
  std::iota(perm.begin(), perm.end(), NodeIndex{0});
  Rng rng(seed);
  shuffle(std::span<NodeIndex>(perm), rng);

  NodeTable table;
  table.permutation_seed = seed;
  table.nodes.resize(n);
  std::vector<const Eigen::VectorXd*> vec_of(n, nullptr);
  for (std::size_t c = 0; c < n; ++c) {
    Node node = std::move(drafts[c].node);
    node.id = perm[c];
    if (node.parent) node.parent = perm[*node.parent];
    vec_of[node.id] = &drafts[c].vec;
    table.nodes[node.id] = std::move(node);
  }

  // embedding rows follow global id order
  std::size_t rows = 0;
  for (const auto* v : vec_of)
    if (v->size() > 0) ++rows;
  const Eigen::Index dim = static_cast<Eigen::Index>(features.dim());
  table.embeddings.resize(static_cast<Eigen::Index>(rows), dim);
  std::int64_t row = 0;
  for (std::size_t id = 0; id < n; ++id) {
    const Eigen::VectorXd& v = *vec_of[id];
    if (v.size() == 0) continue;
    table.embeddings.row(row) = v.transpose().cast<float>();
    table.nodes[id].embedding_row = row;
    table.nodes[id].attrs["embedding_row"] = row;
    ++row;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Edge registry

std::string_view to_string(View view) {
  switch (view) {
    case View::I_in: return "I_in";
    case View::T_in: return "T_in";
    case View::I_cross: return "I_cross";
    case View::T_cross: return "T_cross";
    case View::IT_cross: return "IT_cross";
    case View::fact: return "fact";
  }
  return "?";
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::detection: return "detection";
    case Method::ner: return "ner";
    case Method::annotation: return "annotation";
    case Method::cosine: return "cosine";
  }
  return "?";
}

View parse_view(std::string_view text) {
  for (View v : kViews)
    if (to_string(v) == text) return v;
  fail(ErrorKind::schema, "unknown view '" + std::string(text) + "'");
}

Method parse_method(std::string_view text) {
  for (auto m : {Method::detection, Method::ner, Method::annotation, Method::cosine})
    if (to_string(m) == text) return m;
  fail(ErrorKind::schema, "unknown method '" + std::string(text) + "'");
}

std::vector<std::string> default_detection_classes() {
  return {"person",        "bicycle",      "car",           "motorcycle",
          "airplane",      "bus",          "train",         "truck",
          "boat",          "traffic_light", "fire_hydrant", "stop_sign",
          "parking_meter", "bench",        "bird",          "cat",
          "dog",           "horse",        "sheep",         "cow",
          "elephant",      "bear",         "zebra",         "giraffe",
          "backpack",      "umbrella",     "handbag",       "tie",
          "suitcase",      "frisbee",      "skis",          "snowboard",
          "sports_ball",   "kite",         "baseball_bat",  "baseball_glove",
          "skateboard",    "surfboard",    "tennis_racket", "bottle",
          "wine_glass",    "cup",          "fork",          "knife",
          "spoon",         "bowl",         "banana",        "apple",
          "sandwich",      "orange",       "broccoli",      "carrot",
          "hot_dog",       "pizza",        "donut",         "cake",
          "chair",         "couch",        "potted_plant",  "bed",
          "dining_table",  "toilet",       "tv",            "laptop",
          "mouse",         "remote",       "keyboard",      "cell_phone",
          "microwave",     "oven",         "toaster",       "sink",
          "refrigerator",  "book",         "clock",         "vase",
          "scissors",      "teddy_bear",   "hair_drier",    "toothbrush"};
}

std::vector<std::string> default_ner_classes() {
  return {"person",   "norp",     "fac",      "org",     "gpe",      "loc",
          "product",  "event",    "work_of_art", "law",  "language", "date",
          "time",     "percent",  "money",    "quantity", "ordinal", "cardinal"};
}

std::vector<std::string> read_class_list(const std::filesystem::path& path) {
  std::vector<std::string> out;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line.front() != '#') out.push_back(line);
  }
  return out;
}

namespace {

struct RangeRule {
  int first;
  int last;
  Method method;
  std::vector<View> views;
};

// 105 is filed under I_in in the edge table but described as cross-image
// knowledge elsewhere, so both views are accepted for it.
const std::vector<RangeRule>& range_rules() {
  static const std::vector<RangeRule> rules = {
      {0, 79, Method::detection, {View::I_in}},
      {80, 97, Method::ner, {View::T_in}},
      {98, 101, Method::annotation, {View::fact}},
      {102, 104, Method::annotation, {View::IT_cross}},
      {105, 105, Method::cosine, {View::I_in, View::I_cross}},
      {106, 109, Method::annotation, {View::T_cross, View::I_cross}},
      {110, 113, Method::cosine, {View::T_cross, View::I_cross}},
  };
  return rules;
}

}  // namespace

void validate_edge_type(const EdgeType& t) {
  if (t.code >= kEdgeCodes)
    fail(ErrorKind::unknown_code, "edge code " + std::to_string(t.code) +
                                      " outside 0..113");
  if (t.name.empty())
    fail(ErrorKind::registry_violation,
         "edge code " + std::to_string(t.code) + " has an empty name");
  for (const auto& r : range_rules()) {
    if (t.code < r.first || t.code > r.last) continue;
    if (t.method != r.method ||
        std::find(r.views.begin(), r.views.end(), t.view) == r.views.end())
      fail(ErrorKind::registry_violation,
           "edge code " + std::to_string(t.code) + " must use method " +
               std::string(to_string(r.method)) + " and a view of its range");
    return;
  }
}

EdgeRegistry EdgeRegistry::with_class_names(const std::vector<std::string>& detection,
                                            const std::vector<std::string>& ner) {
  if (detection.size() != kDetectionClasses)
    fail(ErrorKind::registry_violation, "detection class list must have 80 names");
  if (ner.size() != kNerClasses)
    fail(ErrorKind::registry_violation, "NER class list must have 18 names");
  EdgeRegistry reg;
  auto set = [&reg](int code, std::string name, View view, Method method) {
    reg.entries_[code] = {static_cast<EdgeCode>(code), std::move(name), view, method};
  };
  for (int c = 0; c < kDetectionClasses; ++c)
    set(c, "det_" + detection[c], View::I_in, Method::detection);
  for (int k = 0; k < kNerClasses; ++k)
    set(codes::kFirstNer + k, "ner_" + ner[k], View::T_in, Method::ner);
  using namespace codes;
  set(kFactTitle, "fact_title", View::fact, Method::annotation);
  set(kFactContent, "fact_content", View::fact, Method::annotation);
  set(kFactImage, "fact_image", View::fact, Method::annotation);
  set(kSameEventFact, "fact_event_sibling", View::fact, Method::annotation);
  set(kImageDescription, "image_description", View::IT_cross, Method::annotation);
  set(kImageTitle, "image_title", View::IT_cross, Method::annotation);
  set(kImageContent, "image_content", View::IT_cross, Method::annotation);
  set(kImageSimilarity, "imgsim", View::I_in, Method::cosine);
  set(kSameEventTitle, "event_title_title", View::T_cross, Method::annotation);
  set(kTextContinuity, "content_continuity", View::T_cross, Method::annotation);
  set(kSameEventImage, "event_image_image", View::I_cross, Method::annotation);
  set(kSameEventContentTitle, "event_content_title", View::T_cross, Method::annotation);
  set(kContentContentClip, "content_content_clip", View::T_cross, Method::cosine);
  set(kTitleTitleClip, "title_title_clip", View::T_cross, Method::cosine);
  set(kImageImageClip, "image_image_clip", View::I_cross, Method::cosine);
  set(kTitleContentClip, "title_content_clip", View::T_cross, Method::cosine);
  return reg;
}

EdgeRegistry EdgeRegistry::defaults() {
  return with_class_names(default_detection_classes(), default_ner_classes());
}

const EdgeType& EdgeRegistry::at(int code) const {
  if (code < 0 || code >= kEdgeCodes)
    fail(ErrorKind::unknown_code,
         "edge code " + std::to_string(code) + " outside 0..113");
  return entries_[static_cast<std::size_t>(code)];
}

void EdgeRegistry::apply_overrides(const json& overrides) {
  if (!overrides.is_object())
    fail(ErrorKind::schema, "registry overrides must be a JSON object");
  auto next = entries_;
  for (const auto& [key, value] : overrides.items()) {
    int code = -1;
    try {
      std::size_t used = 0;
      code = std::stoi(key, &used);
      if (used != key.size()) code = -1;
    } catch (const std::exception&) {
    }
    if (code < 0 || code >= kEdgeCodes)
      fail(ErrorKind::unknown_code, "registry override for unknown code '" + key + "'");
    EdgeType t = next[code];
    try {
      if (value.contains("name")) t.name = value.at("name").get<std::string>();
      if (value.contains("view")) t.view = parse_view(value.at("view").get<std::string>());
      if (value.contains("method"))
        t.method = parse_method(value.at("method").get<std::string>());
    } catch (const json::exception& e) {
      fail(ErrorKind::schema, "registry override " + key + ": " + e.what());
    }
    validate_edge_type(t);
    next[code] = std::move(t);
  }
  entries_ = std::move(next);
}

const EdgeRegistry& edge_registry() {
  static const EdgeRegistry reg = EdgeRegistry::defaults();
  return reg;
}

EdgeRegistry load_registry(const std::filesystem::path& overrides) {
  EdgeRegistry reg = EdgeRegistry::defaults();
  json j;
  try {
    j = json::parse(read_file(overrides));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::schema, "registry overrides: " + std::string(e.what()));
  }
  reg.apply_overrides(j);
  return reg;
}

}  // namespace uknow
