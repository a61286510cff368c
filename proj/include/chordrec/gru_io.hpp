#pragma once

#include "chordrec/gru.hpp"
#include "chordrec/training.hpp"
#include "json.hpp"

namespace chordrec::neural {

// {"shape": {...}, "parameters": {"embedding": [...], ...}} with every block
// stored column-major as a flat array.
nlohmann::json network_to_json(const GruNetwork<double>& net);
GruNetwork<double> network_from_json(const nlohmann::json& j);

nlohmann::json adam_to_json(const AdamConfig& adam);

}  // namespace chordrec::neural
