#pragma once

#include <filesystem>
#include <string>

#include "ttree/tree.hpp"

namespace ttree {

/// JSON model document: mode, site dims, root, per-tensor wiring, shape and
/// row-major values. Doubles round-trip exactly.
std::string model_to_json(const TensorTree& tree);
TensorTree model_from_json(const std::string& text);

void save_model(const TensorTree& tree, const std::filesystem::path& path);
TensorTree load_model(const std::filesystem::path& path);

}  // namespace ttree
