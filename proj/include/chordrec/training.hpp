#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "chordrec/gru.hpp"

namespace chordrec::neural {

// One training sequence for next-step prediction. inputs[0] is normally the
// start symbol; targets[k] is the symbol to predict after consuming
// inputs[0..k]. For a sigmoid head the targets are 0/1.
struct Sequence {
  std::vector<int> inputs;
  std::vector<int> targets;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class ClipMode { kNone, kGlobalNorm, kElementwise };

// Learning rate is constant until anneal_start_epoch, then decays linearly so
// that it would reach 0 after the final epoch.
const char* clip_mode_name(ClipMode mode);
// Unknown names map to kNone.
ClipMode clip_mode_from(const std::string& name);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 4;
  double learning_rate = 0.005;
  int anneal_start_epoch = 50;
  double clip = 0.0;
  ClipMode clip_mode = ClipMode::kNone;
  AdamConfig adam;
  std::uint64_t seed = 0;
  // Applied to every sequence each time it is shown; may be empty.
  std::function<Sequence(const Sequence&, std::mt19937_64&)> augment;
  // Called after each epoch with (epoch, mean loss).
  std::function<void(int, double)> on_epoch;

  double learning_rate_at(int epoch) const;
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean per-event loss, one entry per epoch
  std::int64_t updates = 0;
};

class Adam {
 public:
  Adam(Eigen::Index size, AdamConfig config);
  void apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double learning_rate);
  std::int64_t steps() const { return steps_; }

 private:
  AdamConfig config_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::int64_t steps_ = 0;
};

// Rescales grad so that its global L2 norm is at most threshold (or clamps
// element-wise). Returns the norm before clipping.
double clip_gradient(Eigen::VectorXd& grad, double threshold, ClipMode mode);

// Mean next-step cross-entropy over all prediction events of the batch, and
// its gradient with respect to net.parameters() (full BPTT).
double loss_and_gradient(const GruNetwork<double>& net, std::span<const Sequence> batch,
                         Eigen::VectorXd& grad);
double loss(const GruNetwork<double>& net, std::span<const Sequence> batch);

TrainResult train_next_step(GruNetwork<double>& net, std::span<const Sequence> corpus,
                            const TrainConfig& config);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  Eigen::Index worst_index = -1;
  Eigen::VectorXd analytic;
  Eigen::VectorXd numeric;
};

// Compares the BPTT gradient with central finite differences for every
// parameter. relative error = |a - n| / max(|a| + |n|, 1e-8).
GradientCheckResult gradient_check(const GruNetwork<double>& net, std::span<const Sequence> batch,
                                   double step = 1e-5);

}  // namespace chordrec::neural
