#include "chordrec/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chordrec/error.hpp"

namespace chordrec::neural {
namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

// Forward activations of a padded batch, time-major.
struct ForwardCache {
  int steps = 0;
  int batch = 0;
  std::vector<std::vector<int>> inputs;   // [t][b]
  std::vector<std::vector<int>> targets;  // [t][b], -1 for padding
  std::vector<Matrix> hidden;             // hidden[t] is the state before step t
  std::vector<Matrix> reset, update, candidate;
  std::vector<Matrix> probs;
  double loss_sum = 0.0;
  std::int64_t events = 0;
};

void validate_batch(const GruShape& shape, std::span<const Sequence> batch) {
  for (const Sequence& s : batch) {
    if (s.inputs.size() != s.targets.size()) {
      throw ValidationError("sequence inputs/targets length mismatch");
    }
    for (int x : s.inputs) {
      if (x < 0 || x >= shape.input_vocab) {
        throw ValidationError("input symbol " + std::to_string(x) + " out of range");
      }
    }
    const int target_limit = shape.sigmoid_head() ? 2 : shape.outputs;
    for (int y : s.targets) {
      if (y < 0 || y >= target_limit) {
        throw ValidationError("target symbol " + std::to_string(y) + " out of range");
      }
    }
  }
}

ForwardCache forward(const GruNetwork<double>& net, std::span<const Sequence> batch) {
  const GruShape& shape = net.shape();
  validate_batch(shape, batch);
  const int H = shape.hidden;
  ForwardCache cache;
  cache.batch = static_cast<int>(batch.size());
  for (const Sequence& s : batch) cache.steps = std::max(cache.steps, static_cast<int>(s.inputs.size()));
  const int T = cache.steps, B = cache.batch;
  cache.inputs.assign(static_cast<std::size_t>(T), std::vector<int>(static_cast<std::size_t>(B), 0));
  cache.targets.assign(static_cast<std::size_t>(T), std::vector<int>(static_cast<std::size_t>(B), -1));
  for (int b = 0; b < B; ++b) {
    const Sequence& s = batch[static_cast<std::size_t>(b)];
    for (std::size_t t = 0; t < s.inputs.size(); ++t) {
      cache.inputs[t][static_cast<std::size_t>(b)] = s.inputs[t];
      cache.targets[t][static_cast<std::size_t>(b)] = s.targets[t];
    }
  }

  const auto U = net.recurrent_weights();
  const auto Wo = net.output_weights();
  cache.hidden.push_back(Matrix::Zero(H, B));
  for (int t = 0; t < T; ++t) {
    const Matrix& h = cache.hidden.back();
    Matrix pre(3 * H, B);
    for (int b = 0; b < B; ++b) pre.col(b) = net.input_projection(cache.inputs[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)]);
    pre.colwise() += net.bias();
    pre.topRows(2 * H).noalias() += U.topRows(2 * H) * h;
    Matrix r = sigmoid(pre.topRows(H));
    Matrix u = sigmoid(pre.middleRows(H, H));
    pre.bottomRows(H).noalias() += U.bottomRows(H) * r.cwiseProduct(h);
    Matrix c = pre.bottomRows(H).array().tanh().matrix();
    Matrix next = u.cwiseProduct(h) + (1.0 - u.array()).matrix().cwiseProduct(c);

    Matrix logits = Wo * next;
    logits.colwise() += net.output_bias();
    Matrix p(logits.rows(), B);
    for (int b = 0; b < B; ++b) {
      const int y = cache.targets[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)];
      if (shape.sigmoid_head()) {
        const double z = logits(0, b);
        p(0, b) = 1.0 / (1.0 + std::exp(-z));
        if (y >= 0) {
          // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
          const double s = y == 1 ? -z : z;
          cache.loss_sum += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
          ++cache.events;
        }
      } else {
        const double mx = logits.col(b).maxCoeff();
        const Vector e = (logits.col(b).array() - mx).exp().matrix();
        const double sum = e.sum();
        p.col(b) = e / sum;
        if (y >= 0) {
          cache.loss_sum += -(logits(y, b) - mx - std::log(sum));
          ++cache.events;
        }
      }
    }
    cache.reset.push_back(std::move(r));
    cache.update.push_back(std::move(u));
    cache.candidate.push_back(std::move(c));
    cache.probs.push_back(std::move(p));
    cache.hidden.push_back(std::move(next));
  }
  return cache;
}

}  // namespace

const char* clip_mode_name(ClipMode mode) {
  switch (mode) {
    case ClipMode::kNone: return "none";
    case ClipMode::kGlobalNorm: return "global_norm";
    case ClipMode::kElementwise: return "elementwise";
  }
  return "none";
}

ClipMode clip_mode_from(const std::string& name) {
  if (name == "global_norm") return ClipMode::kGlobalNorm;
  if (name == "elementwise") return ClipMode::kElementwise;
  return ClipMode::kNone;
}

double TrainConfig::learning_rate_at(int epoch) const {
  if (epoch < anneal_start_epoch) return learning_rate;
  const double span = static_cast<double>(epochs - anneal_start_epoch);
  if (span <= 0) return learning_rate;
  return learning_rate * std::max(0.0, (epochs - epoch) / span);
}

Adam::Adam(Eigen::Index size, AdamConfig config)
    : config_(config), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double learning_rate) {
  ++steps_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  params.array() -= learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.epsilon);
}

double clip_gradient(Eigen::VectorXd& grad, double threshold, ClipMode mode) {
  const double norm = grad.norm();
  if (mode == ClipMode::kGlobalNorm && threshold > 0 && norm > threshold) {
    grad *= threshold / norm;
  } else if (mode == ClipMode::kElementwise && threshold > 0) {
    grad = grad.cwiseMax(-threshold).cwiseMin(threshold);
  }
  return norm;
}

double loss(const GruNetwork<double>& net, std::span<const Sequence> batch) {
  const ForwardCache cache = forward(net, batch);
  return cache.events > 0 ? cache.loss_sum / static_cast<double>(cache.events) : 0.0;
}

double loss_and_gradient(const GruNetwork<double>& net, std::span<const Sequence> batch,
                         Eigen::VectorXd& grad) {
  const ForwardCache cache = forward(net, batch);
  const GruShape& shape = net.shape();
  GruNetwork<double> g(shape);
  if (cache.events == 0) {
    grad = g.parameters();
    return 0.0;
  }
  const double scale = 1.0 / static_cast<double>(cache.events);
  const int H = shape.hidden, B = cache.batch;

  const auto U = net.recurrent_weights();
  const auto Wo = net.output_weights();
  const auto Win = net.input_weights();
  auto gU = g.recurrent_weights();
  auto gWo = g.output_weights();
  auto gbo = g.output_bias();
  auto gWin = g.input_weights();
  auto gb = g.bias();

  Matrix dh_next = Matrix::Zero(H, B);
  for (int t = cache.steps - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const Matrix& hp = cache.hidden[ts];
    const Matrix& h = cache.hidden[ts + 1];
    const Matrix& r = cache.reset[ts];
    const Matrix& u = cache.update[ts];
    const Matrix& c = cache.candidate[ts];

    Matrix dlogits = cache.probs[ts];
    for (int b = 0; b < B; ++b) {
      const int y = cache.targets[ts][static_cast<std::size_t>(b)];
      if (y < 0) {
        dlogits.col(b).setZero();
      } else if (shape.sigmoid_head()) {
        dlogits(0, b) -= y;
      } else {
        dlogits(y, b) -= 1.0;
      }
    }
    dlogits *= scale;
    gWo.noalias() += dlogits * h.transpose();
    gbo += dlogits.rowwise().sum();

    Matrix dh = Wo.transpose() * dlogits + dh_next;
    const Matrix du = dh.cwiseProduct(hp - c).cwiseProduct(u).cwiseProduct((1.0 - u.array()).matrix());
    const Matrix dc =
        dh.cwiseProduct((1.0 - u.array()).matrix()).cwiseProduct((1.0 - c.array().square()).matrix());
    Matrix dh_prev = dh.cwiseProduct(u);

    const Matrix rh = r.cwiseProduct(hp);
    gU.bottomRows(H).noalias() += dc * rh.transpose();
    const Matrix drh = U.bottomRows(H).transpose() * dc;
    const Matrix dr = drh.cwiseProduct(hp).cwiseProduct(r).cwiseProduct((1.0 - r.array()).matrix());
    dh_prev += drh.cwiseProduct(r);

    Matrix dpre(3 * H, B);
    dpre.topRows(H) = dr;
    dpre.middleRows(H, H) = du;
    dpre.bottomRows(H) = dc;
    gU.topRows(2 * H).noalias() += dpre.topRows(2 * H) * hp.transpose();
    dh_prev.noalias() += U.topRows(2 * H).transpose() * dpre.topRows(2 * H);
    gb += dpre.rowwise().sum();

    if (shape.one_hot()) {
      for (int b = 0; b < B; ++b) gWin.col(cache.inputs[ts][static_cast<std::size_t>(b)]) += dpre.col(b);
    } else {
      const auto E = net.embedding();
      auto gE = g.embedding();
      Matrix x(shape.embedding_dim, B);
      for (int b = 0; b < B; ++b) x.col(b) = E.col(cache.inputs[ts][static_cast<std::size_t>(b)]);
      gWin.noalias() += dpre * x.transpose();
      const Matrix dx = Win.transpose() * dpre;
      for (int b = 0; b < B; ++b) gE.col(cache.inputs[ts][static_cast<std::size_t>(b)]) += dx.col(b);
    }
    dh_next = std::move(dh_prev);
  }
  grad = std::move(g.parameters());
  return cache.loss_sum * scale;
}

TrainResult train_next_step(GruNetwork<double>& net, std::span<const Sequence> corpus,
                            const TrainConfig& config) {
  if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");
  if (config.batch_size < 1 || config.epochs < 1) {
    throw ParameterError("batch size and epochs must be positive");
  }
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Adam adam(net.parameters().size(), config.adam);
  TrainResult result;
  Eigen::VectorXd grad;
  std::vector<Sequence> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = config.learning_rate_at(epoch);
    double loss_sum = 0.0;
    std::int64_t events = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      batch.clear();
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      for (std::size_t i = begin; i < end; ++i) {
        const Sequence& s = corpus[order[i]];
        batch.push_back(config.augment ? config.augment(s, rng) : s);
      }
      const double batch_loss = loss_and_gradient(net, batch, grad);
      std::int64_t batch_events = 0;
      for (const Sequence& s : batch) batch_events += static_cast<std::int64_t>(s.targets.size());
      if (!std::isfinite(batch_loss) || !grad.allFinite()) {
        throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch + 1), epoch + 1);
      }
      loss_sum += batch_loss * static_cast<double>(batch_events);
      events += batch_events;
      clip_gradient(grad, config.clip, config.clip_mode);
      adam.apply(net.parameters(), grad, lr);
    }
    const double mean = events > 0 ? loss_sum / static_cast<double>(events) : 0.0;
    result.loss_curve.push_back(mean);
    if (config.on_epoch) config.on_epoch(epoch + 1, mean);
  }
  result.updates = adam.steps();
  return result;
}

GradientCheckResult gradient_check(const GruNetwork<double>& net, std::span<const Sequence> batch,
                                   double step) {
  GradientCheckResult result;
  loss_and_gradient(net, batch, result.analytic);
  GruNetwork<double> probe = net;
  auto& p = probe.parameters();
  result.numeric.resize(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + step;
    const double up = loss(probe, batch);
    p[i] = saved - step;
    const double down = loss(probe, batch);
    p[i] = saved;
    result.numeric[i] = (up - down) / (2.0 * step);
    const double a = result.analytic[i], n = result.numeric[i];
    const double rel = std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-8);
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace chordrec::neural
