#pragma once

#include "relmatch/error.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace relmatch::data {

/// Named float64 arrays plus a JSON metadata block (config echo, seed,
/// vocabulary, ...).
///
/// File layout, little-endian: "RSCK" | u32 version=1 | u64 header bytes |
/// header JSON {"meta": ..., "arrays": [{"name", "rows", "cols"}...]} |
/// each array's values as row-major float64.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Eigen::MatrixXd>> arrays;

  const Eigen::MatrixXd& array(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Appends every field of a weight bundle under `prefix`.
template <class W>
void store_weights(Checkpoint& ckpt, const W& weights, const std::string& prefix) {
  weights.visit([&](const std::string& name, const Eigen::MatrixXd& m) { ckpt.arrays.emplace_back(prefix + name, m); });
}

/// Fills a weight bundle from arrays stored under `prefix`.
template <class W>
void restore_weights(const Checkpoint& ckpt, W& weights, const std::string& prefix) {
  weights.visit([&](const std::string& name, Eigen::MatrixXd& m) { m = ckpt.array(prefix + name); });
}

}  // namespace relmatch::data
