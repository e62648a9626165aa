#pragma once

#include <Eigen/Dense>
#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "uknow/corpus.hpp"
#include "uknow/features.hpp"

namespace uknow {

using NodeIndex = std::uint32_t;
using EdgeCode = std::uint16_t;

inline constexpr int kEdgeCodes = 114;

enum class Level : std::uint8_t { L1 = 1, L2 = 2, L3 = 3 };
enum class Modality : std::uint8_t { fact, image, text, object, entity };

std::string_view to_string(Level level);
std::string_view to_string(Modality modality);
Level parse_level(std::string_view text);
Modality parse_modality(std::string_view text);

// Where a node came from. Ordering by this key is the canonical pre-shuffle
// node order: level, then owner (facts before pairs, by id), then field,
// then payload index within the parent field.
struct Origin {
  Level level = Level::L1;
  OwnerKind owner = OwnerKind::fact;
  std::uint64_t id = 0;
  Selector selector = Selector::title;
  std::uint32_t slot = 0;
  std::int32_t item = -1;  // detection / distinct-entity index for L3 nodes

  auto operator<=>(const Origin&) const = default;
  bool operator==(const Origin&) const = default;

  FeatureOwner feature_owner() const { return {owner, id, selector, slot}; }
  std::string to_string() const;
};

struct Node {
  NodeIndex id = 0;
  Level level = Level::L1;
  Modality modality = Modality::fact;
  Origin origin;
  std::optional<NodeIndex> parent;  // L2 -> fact (news only), L3 -> L2
  std::int64_t embedding_row = -1;  // row in NodeTable::embeddings, or -1
  nlohmann::json attrs = nlohmann::json::object();

  // Fine-grained node type: fact, title, content, image, image_desc,
  // pair_text, pair_image, object or entity.
  std::string_view kind() const;

  bool operator==(const Node&) const = default;
};

using EmbeddingMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NodeTable {
  std::vector<Node> nodes;  // nodes[i].id == i
  std::uint64_t permutation_seed = 0;
  EmbeddingMatrix embeddings;  // one row per node with a feature vector

  std::size_t size() const { return nodes.size(); }
  const Node& at(NodeIndex id) const;
  bool has_embedding(NodeIndex id) const { return at(id).embedding_row >= 0; }
  Eigen::VectorXd embedding(NodeIndex id) const;  // empty if absent

  bool operator==(const NodeTable& o) const {
    return nodes == o.nodes && permutation_seed == o.permutation_seed &&
           embeddings.rows() == o.embeddings.rows() &&
           embeddings.cols() == o.embeddings.cols() && embeddings == o.embeddings;
  }
};

// Nodes in canonical order with ids 0..N-1 before shuffling.
std::vector<Node> canonical_nodes(const Corpus& corpus, const FeatureStore& features);

NodeTable assign_nodes(const Corpus& corpus, const FeatureStore& features,
                       std::uint64_t seed);

enum class View : std::uint8_t { I_in, T_in, I_cross, T_cross, IT_cross, fact };
enum class Method : std::uint8_t { detection, ner, annotation, cosine };

inline constexpr std::array<View, 6> kViews = {View::I_in,    View::T_in,
                                               View::I_cross, View::T_cross,
                                               View::IT_cross, View::fact};

std::string_view to_string(View view);
std::string_view to_string(Method method);
View parse_view(std::string_view text);
Method parse_method(std::string_view text);

// Annotation and similarity codes with fixed construction roles.
namespace codes {
inline constexpr EdgeCode kFirstNer = 80;
inline constexpr EdgeCode kFactTitle = 98;
inline constexpr EdgeCode kFactContent = 99;
inline constexpr EdgeCode kFactImage = 100;
inline constexpr EdgeCode kSameEventFact = 101;
inline constexpr EdgeCode kImageDescription = 102;
inline constexpr EdgeCode kImageTitle = 103;
inline constexpr EdgeCode kImageContent = 104;
inline constexpr EdgeCode kImageSimilarity = 105;
inline constexpr EdgeCode kSameEventTitle = 106;
inline constexpr EdgeCode kTextContinuity = 107;
inline constexpr EdgeCode kSameEventImage = 108;
inline constexpr EdgeCode kSameEventContentTitle = 109;
inline constexpr EdgeCode kContentContentClip = 110;
inline constexpr EdgeCode kTitleTitleClip = 111;
inline constexpr EdgeCode kImageImageClip = 112;
inline constexpr EdgeCode kTitleContentClip = 113;
}  // namespace codes

struct EdgeType {
  EdgeCode code = 0;
  std::string name;
  View view = View::fact;
  Method method = Method::annotation;

  bool operator==(const EdgeType&) const = default;
};

class EdgeRegistry {
 public:
  // The static table with the default detection and NER class names.
  static EdgeRegistry defaults();
  static EdgeRegistry with_class_names(const std::vector<std::string>& detection,
                                       const std::vector<std::string>& ner);

  const EdgeType& at(int code) const;
  std::span<const EdgeType> entries() const { return entries_; }

  // Applies {"<code>": {"name", "view", "method"}} overrides; each entry must
  // keep the method and view family of its code range.
  void apply_overrides(const nlohmann::json& overrides);

  bool operator==(const EdgeRegistry&) const = default;

 private:
  std::array<EdgeType, kEdgeCodes> entries_;
};

const EdgeRegistry& edge_registry();

// Checks an entry against the range rules of its code.
void validate_edge_type(const EdgeType& type);

EdgeRegistry load_registry(const std::filesystem::path& overrides);

std::vector<std::string> default_detection_classes();
std::vector<std::string> default_ner_classes();
std::vector<std::string> read_class_list(const std::filesystem::path& path);

}  // namespace uknow
