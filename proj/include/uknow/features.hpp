#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uknow/corpus.hpp"
#include "uknow/error.hpp"

namespace uknow {

inline constexpr int kDetectionClasses = 80;
inline constexpr int kNerClasses = 18;

enum class OwnerKind : std::uint8_t { fact, pair };

// Declaration order is the canonical order of L2 nodes within one owner.
enum class Selector : std::uint8_t {
  title,
  content,
  image,
  image_desc,
  pair_text,
  pair_image,
};

// A field of a corpus item that features can attach to.
struct FeatureOwner {
  OwnerKind kind = OwnerKind::fact;
  std::uint64_t id = 0;
  Selector selector = Selector::title;
  std::uint32_t slot = 0;  // image index for image / image_desc, else 0

  auto operator<=>(const FeatureOwner&) const = default;
  bool operator==(const FeatureOwner&) const = default;

  bool is_image() const {
    return selector == Selector::image || selector == Selector::pair_image;
  }
  bool is_text() const { return !is_image(); }

  // "title", "image[2]", ...
  std::string selector_string() const;
};

// Parses a selector string such as "content" or "image_desc[1]".
std::pair<Selector, std::uint32_t> parse_selector(std::string_view text);
std::string_view selector_name(Selector s);

enum class FeatureKind : std::uint8_t { embedding, detection, entity, caption };

std::string_view to_string(FeatureKind kind);

struct Detection {
  int class_index = 0;
  std::array<double, 4> box{};  // x0, y0, x1, y1 in [0, 1]
  Eigen::VectorXd crop_embedding;  // empty when the extractor supplied none

  bool operator==(const Detection& o) const {
    return class_index == o.class_index && box == o.box &&
           crop_embedding.size() == o.crop_embedding.size() &&
           crop_embedding == o.crop_embedding;
  }
};

struct EntityMention {
  std::string surface;
  int ner_index = 0;
  std::size_t span_begin = 0;  // [begin, end) in code points
  std::size_t span_end = 0;
  Eigen::VectorXd embedding;  // optional; empty when absent

  bool operator==(const EntityMention& o) const {
    return surface == o.surface && ner_index == o.ner_index &&
           span_begin == o.span_begin && span_end == o.span_end &&
           embedding.size() == o.embedding.size() && embedding == o.embedding;
  }
};

using FeaturePayload = std::variant<Eigen::VectorXd, std::vector<Detection>,
                                    std::vector<EntityMention>, std::string>;

struct FeatureRecord {
  FeatureOwner owner;
  FeatureKind kind = FeatureKind::embedding;
  FeaturePayload payload;

  bool operator==(const FeatureRecord& o) const {
    if (!(owner == o.owner) || kind != o.kind || payload.index() != o.payload.index())
      return false;
    if (const auto* v = std::get_if<Eigen::VectorXd>(&payload)) {
      const auto& w = std::get<Eigen::VectorXd>(o.payload);
      return v->size() == w.size() && *v == w;
    }
    return std::visit(
        [&o](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, Eigen::VectorXd>) return false;
          else return a == std::get<T>(o.payload);
        },
        payload);
  }
};

// Immutable index of Phase-1 outputs keyed by owner. Lookups of absent
// features return nullptr or an empty span.
class FeatureStore {
 public:
  FeatureStore() = default;
  FeatureStore(std::vector<FeatureRecord> records);

  // Embedding dimension shared by every vector in the store; 0 when the
  // store holds no vectors at all.
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<FeatureRecord>& records() const { return records_; }

  const Eigen::VectorXd* embedding(const FeatureOwner& owner) const;
  std::span<const Detection> detections(const FeatureOwner& owner) const;
  std::span<const EntityMention> entities(const FeatureOwner& owner) const;
  const std::string* caption(const FeatureOwner& owner) const;

 private:
  struct Entry {
    std::optional<Eigen::VectorXd> embedding;
    std::vector<Detection> detections;
    std::vector<EntityMention> entities;
    std::optional<std::string> caption;
  };

  std::size_t dim_ = 0;
  std::vector<FeatureRecord> records_;
  std::map<FeatureOwner, Entry> index_;
};

// Deterministic stand-in for the image/text encoders. The content is split
// into lowercase alphanumeric tokens (bytes >= 0x80 count as alphanumeric);
// each token seeds a SplitMix64 stream through keyed_hash(token, seed) that
// yields `dim` standard normals, the token vectors are summed and the sum is
// scaled to unit L2 norm. Contents without tokens hash their raw bytes as a
// single token. Texts sharing words therefore get correlated vectors, while
// unrelated contents are nearly orthogonal.
Eigen::VectorXd stub_featurize(std::string_view content, std::size_t dim,
                               std::uint64_t seed);

// Stub detections and entity mentions, derived from hashes of the content.
std::vector<Detection> stub_detect(std::string_view image_content,
                                   std::size_t dim, std::uint64_t seed);
std::vector<EntityMention> stub_entities(std::string_view text, std::size_t dim,
                                         std::uint64_t seed);

// Stub Phase-1 output for a whole corpus, in canonical owner order.
std::vector<FeatureRecord> stub_feature_records(const Corpus& corpus,
                                                std::size_t dim,
                                                std::uint64_t seed);

std::string serialize_feature_record(const FeatureRecord& record);
std::string serialize_feature_manifest(const std::vector<FeatureRecord>& records);

FeatureStore parse_feature_manifest(std::string_view text, const Corpus& corpus);
FeatureStore load_feature_manifest(const std::filesystem::path& path,
                                   const Corpus& corpus);

// u.v / (|u| |v|), evaluated as dot / sqrt(|u|^2 |v|^2) so that the result is
// exactly symmetric and cosine(u, u) is exactly 1.
template <typename DerivedU, typename DerivedV>
double cosine(const Eigen::MatrixBase<DerivedU>& u,
              const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size())
    fail(ErrorKind::invalid_argument, "cosine: length mismatch");
  const double uu = u.template cast<double>().squaredNorm();
  const double vv = v.template cast<double>().squaredNorm();
  if (uu == 0.0 || vv == 0.0)
    fail(ErrorKind::undefined_similarity, "cosine of a zero vector");
  const double dot = u.template cast<double>().dot(v.template cast<double>());
  return dot / std::sqrt(uu * vv);
}

}  // namespace uknow
