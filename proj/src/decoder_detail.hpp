#pragma once

#include <vector>

#include "chordrec/decoder.hpp"

namespace chordrec::detail {

// Sorted, duplicate-free decoder alphabet; all classes when unset.
std::vector<ChordClass> resolve_alphabet(const ScoreConfig& config);

}  // namespace chordrec::detail
