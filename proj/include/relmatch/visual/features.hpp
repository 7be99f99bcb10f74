#pragma once

#include "relmatch/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relmatch::visual {

using Matrix = Eigen::MatrixXd;

struct RelationLabel {
  std::uint32_t subject = 0;
  std::uint32_t predicate = 0;
  std::uint32_t object = 0;
  bool operator==(const RelationLabel&) const = default;
};

/// Precomputed detector output for one image: k region rows and m relation
/// rows, relations ordered by descending confidence.
struct VisualFeatureSet {
  std::string image_id;
  Matrix regions;    // k x d_v
  Matrix relations;  // m x d_r
  std::vector<RelationLabel> labels;
  std::vector<double> confidence;

  Eigen::Index num_regions() const { return regions.rows(); }
  Eigen::Index num_relations() const { return relations.rows(); }
  Eigen::Index region_dim() const { return regions.cols(); }
  Eigen::Index relation_dim() const { return relations.cols(); }

  bool operator==(const VisualFeatureSet& o) const {
    return image_id == o.image_id && regions.rows() == o.regions.rows() && regions.cols() == o.regions.cols() &&
           relations.rows() == o.relations.rows() && relations.cols() == o.relations.cols() &&
           regions == o.regions && relations == o.relations && labels == o.labels && confidence == o.confidence;
  }
};

/// Throws relmatch::Error unless k >= 1, values are finite, label and
/// confidence counts equal m and confidences are non-increasing.
void validate(const VisualFeatureSet& set);

/// Stable sort of relation rows by descending confidence, then keep the first
/// `max_relations`.
void keep_top_relations(VisualFeatureSet& set, std::size_t max_relations);

// Binary layout, little-endian:
//   "RSGF" | u32 version=1 | u32 k | u32 d_v | k*d_v f32
//   | u32 m | u32 d_r | m*d_r f32 | m * (u32 subj, u32 pred, u32 obj, f32 conf)
// Values are stored as float32, so only float-representable sets round-trip.
inline constexpr char kFeatureMagic[4] = {'R', 'S', 'G', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;

std::vector<std::byte> serialize_features(const VisualFeatureSet& set);
/// Parses a feature payload; errors carry the byte offset.
VisualFeatureSet parse_features(std::span<const std::byte> bytes, std::string image_id,
                                std::size_t max_relations = 36);

void save_features(const VisualFeatureSet& set, const std::filesystem::path& path);
/// Image id is the file stem.
VisualFeatureSet load_features(const std::filesystem::path& path, std::size_t max_relations = 36);
std::filesystem::path feature_path(const std::filesystem::path& dir, const std::string& image_id);

/// Sidecar label vocabulary: one label per line.
std::vector<std::string> load_relation_labels(const std::filesystem::path& path);
void save_relation_labels(const std::vector<std::string>& labels, const std::filesystem::path& path);

/// Rows to plant into synthetic features: each target becomes one row plus
/// Gaussian noise of the given standard deviation.
struct PlantedAlignment {
  std::vector<Eigen::VectorXd> region_targets;
  std::vector<Eigen::VectorXd> relation_targets;
  double noise = 0.0;
};

/// Seeded Gaussian features rounded to float32. Planted targets fill the
/// leading rows; the remaining rows are unit Gaussian noise.
VisualFeatureSet synth_features(std::uint64_t seed, Eigen::Index k, Eigen::Index m, Eigen::Index d_v,
                                Eigen::Index d_r, const std::optional<PlantedAlignment>& planted = std::nullopt,
                                std::string image_id = {});

/// Deterministic target vector for a word id, shared by the caption side and
/// the feature side of planted synthetic data.
Eigen::VectorXd word_target(std::uint64_t seed, std::int64_t word, Eigen::Index dim, std::string_view space);

}  // namespace relmatch::visual
