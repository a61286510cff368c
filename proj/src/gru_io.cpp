#include "chordrec/gru_io.hpp"

#include <string>

#include "chordrec/error.hpp"

namespace chordrec::neural {

nlohmann::json network_to_json(const GruNetwork<double>& net) {
  const GruShape& s = net.shape();
  nlohmann::json j;
  j["shape"] = {{"input_vocab", s.input_vocab},
                {"embedding_dim", s.embedding_dim},
                {"hidden", s.hidden},
                {"outputs", s.outputs}};
  nlohmann::json params = nlohmann::json::object();
  for (const auto& block : net.blocks()) {
    const double* begin = net.parameters().data() + block.offset;
    params[block.name] = std::vector<double>(begin, begin + block.rows * block.cols);
  }
  j["parameters"] = std::move(params);
  return j;
}

GruNetwork<double> network_from_json(const nlohmann::json& j) {
  try {
    const auto& s = j.at("shape");
    GruShape shape{s.at("input_vocab").get<int>(), s.at("embedding_dim").get<int>(),
                   s.at("hidden").get<int>(), s.at("outputs").get<int>()};
    GruNetwork<double> net(shape);
    const auto& params = j.at("parameters");
    for (const auto& block : net.blocks()) {
      const auto values = params.at(block.name).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(values.size()) != block.rows * block.cols) {
        throw ShapeError(std::string("parameter block '") + block.name + "' has " +
                         std::to_string(values.size()) + " values, expected " +
                         std::to_string(block.rows * block.cols));
      }
      std::copy(values.begin(), values.end(), net.parameters().data() + block.offset);
    }
    if (!net.parameters().allFinite()) throw ValidationError("non-finite network parameters");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed network JSON: ") + e.what());
  }
}

nlohmann::json adam_to_json(const AdamConfig& adam) {
  return {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"epsilon", adam.epsilon}};
}

}  // namespace chordrec::neural
