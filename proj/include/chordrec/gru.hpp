#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "chordrec/error.hpp"

namespace chordrec::neural {

// Sizes of a single-layer GRU next-step predictor.
//
// Inputs are symbol indices in [0, input_vocab); by convention the last index
// is the start-of-sequence padding symbol. With embedding_dim == 0 the
// symbols are one-hot encoded. outputs == 1 selects a sigmoid head, otherwise
// a softmax over `outputs` classes.
struct GruShape {
  int input_vocab = 0;
  int embedding_dim = 0;
  int hidden = 0;
  int outputs = 0;

  int input_dim() const { return embedding_dim > 0 ? embedding_dim : input_vocab; }
  bool one_hot() const { return embedding_dim == 0; }
  bool sigmoid_head() const { return outputs == 1; }

  Eigen::Index embedding_size() const { return one_hot() ? 0 : Eigen::Index{embedding_dim} * input_vocab; }
  Eigen::Index input_weights_size() const { return Eigen::Index{3} * hidden * input_dim(); }
  Eigen::Index recurrent_weights_size() const { return Eigen::Index{3} * hidden * hidden; }
  Eigen::Index bias_size() const { return Eigen::Index{3} * hidden; }
  Eigen::Index output_weights_size() const { return Eigen::Index{outputs} * hidden; }
  Eigen::Index parameter_count() const {
    return embedding_size() + input_weights_size() + recurrent_weights_size() + bias_size() +
           output_weights_size() + outputs;
  }

  void validate() const {
    if (input_vocab < 1 || hidden < 1 || outputs < 1 || embedding_dim < 0) {
      throw ParameterError("invalid GRU shape: vocab " + std::to_string(input_vocab) + ", embedding " +
                           std::to_string(embedding_dim) + ", hidden " + std::to_string(hidden) +
                           ", outputs " + std::to_string(outputs));
    }
  }
  friend bool operator==(const GruShape&, const GruShape&) = default;
};

// Parameters live in one flat vector; the named blocks are column-major views
// into it. Gate rows are stacked as [reset; update; candidate].
//
//   r  = sigmoid(W_r x + U_r h + b_r)
//   u  = sigmoid(W_u x + U_u h + b_u)
//   c  = tanh(W_c x + U_c (r .* h) + b_c)
//   h' = u .* h + (1 - u) .* c
template <typename Scalar>
class GruNetwork {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  GruNetwork() = default;
  explicit GruNetwork(const GruShape& shape) : shape_(shape) {
    shape_.validate();
    params_ = Vector::Zero(shape_.parameter_count());
  }

  // Uniform initialization in [-scale, scale].
  static GruNetwork random(const GruShape& shape, std::uint64_t seed, double scale = 0.08) {
    GruNetwork net(shape);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (Eigen::Index i = 0; i < net.params_.size(); ++i) net.params_[i] = static_cast<Scalar>(dist(rng));
    return net;
  }

  const GruShape& shape() const { return shape_; }
  int hidden_size() const { return shape_.hidden; }

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  MatrixMap embedding() { return block(0, shape_.embedding_dim, shape_.input_vocab); }
  MatrixMap input_weights() { return block(off_input(), 3 * shape_.hidden, shape_.input_dim()); }
  MatrixMap recurrent_weights() { return block(off_recurrent(), 3 * shape_.hidden, shape_.hidden); }
  VectorMap bias() { return VectorMap(params_.data() + off_bias(), 3 * shape_.hidden); }
  MatrixMap output_weights() { return block(off_output(), shape_.outputs, shape_.hidden); }
  VectorMap output_bias() { return VectorMap(params_.data() + off_output_bias(), shape_.outputs); }

  ConstMatrixMap embedding() const { return cblock(0, shape_.embedding_dim, shape_.input_vocab); }
  ConstMatrixMap input_weights() const { return cblock(off_input(), 3 * shape_.hidden, shape_.input_dim()); }
  ConstMatrixMap recurrent_weights() const {
    return cblock(off_recurrent(), 3 * shape_.hidden, shape_.hidden);
  }
  ConstVectorMap bias() const { return ConstVectorMap(params_.data() + off_bias(), 3 * shape_.hidden); }
  ConstMatrixMap output_weights() const { return cblock(off_output(), shape_.outputs, shape_.hidden); }
  ConstVectorMap output_bias() const {
    return ConstVectorMap(params_.data() + off_output_bias(), shape_.outputs);
  }

  // Named (name, offset, rows, cols) blocks in storage order; used for
  // serialization.
  struct Block {
    const char* name;
    Eigen::Index offset;
    Eigen::Index rows;
    Eigen::Index cols;
  };
  std::vector<Block> blocks() const {
    std::vector<Block> out;
    if (!shape_.one_hot()) out.push_back({"embedding", 0, shape_.embedding_dim, shape_.input_vocab});
    out.push_back({"input_weights", off_input(), 3 * shape_.hidden, shape_.input_dim()});
    out.push_back({"recurrent_weights", off_recurrent(), 3 * shape_.hidden, shape_.hidden});
    out.push_back({"bias", off_bias(), 3 * shape_.hidden, 1});
    out.push_back({"output_weights", off_output(), shape_.outputs, shape_.hidden});
    out.push_back({"output_bias", off_output_bias(), shape_.outputs, 1});
    return out;
  }

  Vector initial_state() const { return Vector::Zero(shape_.hidden); }

  // W x(symbol): the input contribution to the three gate pre-activations.
  Vector input_projection(int symbol) const {
    check_symbol(symbol);
    if (shape_.one_hot()) return input_weights().col(symbol);
    return input_weights() * embedding().col(symbol);
  }

  // Advances a batch of hidden states (one column each) by one input symbol
  // per column.
  void step_batch(const Matrix& hidden, std::span<const int> symbols, Matrix& next) const {
    const int H = shape_.hidden;
    const Eigen::Index m = hidden.cols();
    Matrix pre(3 * H, m);
    for (Eigen::Index j = 0; j < m; ++j) pre.col(j) = input_projection(symbols[static_cast<std::size_t>(j)]);
    pre.colwise() += bias();
    const auto U = recurrent_weights();
    pre.topRows(2 * H).noalias() += U.topRows(2 * H) * hidden;
    const Matrix reset = sigmoid(pre.topRows(H));
    const Matrix update = sigmoid(pre.middleRows(H, H));
    Matrix gated = reset.cwiseProduct(hidden);
    pre.bottomRows(H).noalias() += U.bottomRows(H) * gated;
    const Matrix candidate = pre.bottomRows(H).array().tanh().matrix();
    next = update.cwiseProduct(hidden) +
           (Matrix::Ones(H, m) - update).cwiseProduct(candidate);
  }

  Vector step(const Vector& hidden, int symbol) const {
    Matrix next;
    const int symbols[1] = {symbol};
    step_batch(hidden, symbols, next);
    return next.col(0);
  }

  // Output logits for a batch of hidden states.
  Matrix logits(const Matrix& hidden) const {
    Matrix out = output_weights() * hidden;
    out.colwise() += output_bias();
    return out;
  }

  // Probabilities from the head: softmax over classes, or the sigmoid of the
  // single logit (probability of the positive symbol).
  Vector output(const Vector& hidden) const {
    Vector z = logits(hidden).col(0);
    if (shape_.sigmoid_head()) {
      z(0) = Scalar(1) / (Scalar(1) + std::exp(-z(0)));
      return z;
    }
    return softmax(z);
  }

  template <typename Other>
  GruNetwork<Other> cast() const {
    GruNetwork<Other> out(shape_);
    out.parameters() = params_.template cast<Other>();
    return out;
  }

  static Vector softmax(const Vector& z) {
    Vector e = (z.array() - z.maxCoeff()).exp().matrix();
    return e / e.sum();
  }

 private:
  static Matrix sigmoid(const auto& x) {
    return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
  }

  void check_symbol(int symbol) const {
    if (symbol < 0 || symbol >= shape_.input_vocab) {
      throw std::out_of_range("input symbol " + std::to_string(symbol) + " outside vocabulary of " +
                              std::to_string(shape_.input_vocab));
    }
  }

  Eigen::Index off_input() const { return shape_.embedding_size(); }
  Eigen::Index off_recurrent() const { return off_input() + shape_.input_weights_size(); }
  Eigen::Index off_bias() const { return off_recurrent() + shape_.recurrent_weights_size(); }
  Eigen::Index off_output() const { return off_bias() + shape_.bias_size(); }
  Eigen::Index off_output_bias() const { return off_output() + shape_.output_weights_size(); }

  MatrixMap block(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
    return MatrixMap(params_.data() + offset, rows, cols);
  }
  ConstMatrixMap cblock(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) const {
    return ConstMatrixMap(params_.data() + offset, rows, cols);
  }

  GruShape shape_;
  Vector params_;
};

}  // namespace chordrec::neural
