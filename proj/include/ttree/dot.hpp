#pragma once

#include <string>
#include <vector>

#include "ttree/dataset.hpp"
#include "ttree/hmm.hpp"
#include "ttree/structure.hpp"
#include "ttree/tree.hpp"

namespace ttree {

/// Graphviz rendering of a model. Internal bonds are colored by MI / ln
/// chi_max (or EE / ln chi_max when `use_ee`), from blue (0) to red (1).
std::string model_dot(const TensorTree& tree, const std::vector<BondReport>& bonds, int chi_max,
                      bool use_ee = false, const Dataset* names = nullptr);

/// HMM edges labeled with their permutation closeness.
std::string hmm_dot(const TensorTree& tree, const HmmExtraction& hmm, const Dataset* names = nullptr);

}  // namespace ttree
