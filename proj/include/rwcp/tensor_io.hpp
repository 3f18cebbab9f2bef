#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "rwcp/grid.hpp"

namespace rwcp {

using Tensor = std::variant<ProbMap, FeatureMap, BinaryMask>;

// Reads an NPY file. Float rank-2 arrays become a ProbMap, float rank-3 a
// FeatureMap, uint8/bool rank-2 a BinaryMask. Accepted dtypes: <f4, <f8, |u1, |b1.
Tensor load_tensor(const std::filesystem::path& path);

ProbMap load_prob_map(const std::filesystem::path& path);
FeatureMap load_feature_map(const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);

// NPY v1.0, little-endian. ProbMap/FeatureMap as <f4, BinaryMask as |u1.
// The file is written to a sibling temporary and renamed into place.
void save_tensor(const ProbMap& grid, const std::filesystem::path& path);
void save_tensor(const FeatureMap& grid, const std::filesystem::path& path);
void save_tensor(const BinaryMask& grid, const std::filesystem::path& path);
void save_tensor(const Tensor& grid, const std::filesystem::path& path);

// Writes text through a temporary sibling and an atomic rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace rwcp
