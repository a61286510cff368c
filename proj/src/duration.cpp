#include "chordrec/duration.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "chordrec/error.hpp"

namespace chordrec {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinP = 1e-9;
constexpr double kMaxP = 1.0 - 1e-9;

FlagLogProbs flag_log_probs(double h) {
  return {std::log1p(-h), h > 0.0 ? std::log(h) : kNegInf};
}

class GeometricSession final : public DurationSession {
 public:
  explicit GeometricSession(double p) : p_(p), lp_(flag_log_probs(p)) {}
  StateId start() override { return 0; }
  StateId advance(StateId, bool) override { return 0; }
  double hazard(StateId) override { return p_; }
  FlagLogProbs log_probs(StateId) override { return lp_; }

 private:
  double p_;
  FlagLogProbs lp_;
};

// State id is d - 1. Hazards are extended on demand.
class NegBinomialSession final : public DurationSession {
 public:
  NegBinomialSession(int n, double p) : chain_(n, p) {}
  StateId start() override { return 0; }
  StateId advance(StateId state, bool change) override { return change ? 0 : state + 1; }
  double hazard(StateId state) override {
    extend(state);
    return hazard_[state];
  }
  FlagLogProbs log_probs(StateId state) override {
    extend(state);
    return log_[state];
  }

 private:
  void extend(StateId state) {
    while (hazard_.size() <= state) {
      if (!hazard_.empty()) chain_.stay();
      hazard_.push_back(chain_.hazard());
      log_.push_back(flag_log_probs(hazard_.back()));
    }
  }

  StagePosterior chain_;
  std::vector<double> hazard_;
  std::vector<FlagLogProbs> log_;
};

void check_p(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("duration probability must be in (0, 1), got " + std::to_string(p));
}

void check_durations(std::span<const int> durations) {
  if (durations.empty()) throw ValidationError("cannot fit a duration model to an empty list");
  for (int d : durations) {
    if (d < 1) throw ValidationError("durations must be >= 1 frame, got " + std::to_string(d));
  }
}

double mean_duration(std::span<const int> durations) {
  return std::accumulate(durations.begin(), durations.end(), 0.0) / static_cast<double>(durations.size());
}

}  // namespace

ChangeSequence change_sequence(std::span<const MaybeChord> frames) {
  ChangeSequence flags;
  if (frames.size() < 2) return flags;
  flags.reserve(frames.size() - 1);
  for (std::size_t t = 1; t < frames.size(); ++t) flags.push_back(frames[t] != frames[t - 1] ? 1 : 0);
  return flags;
}

std::vector<int> complete_durations(const ChangeSequence& flags) {
  std::vector<int> out;
  int d = 1;
  for (std::uint8_t f : flags) {
    if (f) {
      out.push_back(d);
      d = 1;
    } else {
      ++d;
    }
  }
  return out;
}

std::vector<int> segment_durations(const ChangeSequence& flags) {
  auto out = complete_durations(flags);
  int tail = 1;
  for (auto it = flags.rbegin(); it != flags.rend() && !*it; ++it) ++tail;
  out.push_back(tail);
  return out;
}

// ---------------------------------------------------------------------------

StagePosterior::StagePosterior(int stages, double p) : post_(static_cast<std::size_t>(stages), 0.0), p_(p) {
  post_[0] = 1.0;
}

void StagePosterior::reset() {
  std::fill(post_.begin(), post_.end(), 0.0);
  post_[0] = 1.0;
}

void StagePosterior::stay() {
  // One advance opportunity; mass leaving the last stage has exited.
  const std::size_t n = post_.size();
  double carry = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double here = post_[k];
    post_[k] = here * (1.0 - p_) + carry;
    carry = here * p_;
    total += post_[k];
  }
  for (double& x : post_) x /= total;
}

GeometricDuration::GeometricDuration(double p_change) : p_(p_change) { check_p(p_change); }

double GeometricDuration::log_pmf(int d) const {
  if (d < 1) return kNegInf;
  return std::log(p_) + (d - 1) * std::log1p(-p_);
}

int GeometricDuration::sample(std::mt19937_64& rng) const {
  return std::geometric_distribution<int>(p_)(rng) + 1;
}

std::unique_ptr<DurationSession> GeometricDuration::session() const {
  return std::make_unique<GeometricSession>(p_);
}

nlohmann::json GeometricDuration::to_json() const { return {{"family", family()}, {"n", 1}, {"p", p_}}; }

NegBinomialDuration::NegBinomialDuration(int stages, double p) : n_(stages), p_(p) {
  if (stages < 1) throw ParameterError("negative binomial needs at least one stage");
  check_p(p);
}

std::vector<double> NegBinomialDuration::hazards(int max_d) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(max_d, 0)));
  StagePosterior chain(n_, p_);
  for (int d = 1; d <= max_d; ++d) {
    if (d > 1) chain.stay();
    out.push_back(chain.hazard());
  }
  return out;
}

double NegBinomialDuration::hazard(int d) const {
  if (d < 1) throw ParameterError("duration state must be >= 1");
  return hazards(d).back();
}

double NegBinomialDuration::log_pmf(int d) const {
  if (d < n_) return kNegInf;
  return std::lgamma(d) - std::lgamma(n_) - std::lgamma(d - n_ + 1) + n_ * std::log(p_) +
         (d - n_) * std::log1p(-p_);
}

int NegBinomialDuration::sample(std::mt19937_64& rng) const {
  std::geometric_distribution<int> g(p_);
  int d = 0;
  for (int k = 0; k < n_; ++k) d += g(rng) + 1;
  return d;
}

std::unique_ptr<DurationSession> NegBinomialDuration::session() const {
  if (n_ == 1) return std::make_unique<GeometricSession>(p_);
  return std::make_unique<NegBinomialSession>(n_, p_);
}

nlohmann::json NegBinomialDuration::to_json() const { return {{"family", family()}, {"n", n_}, {"p", p_}}; }

// ---------------------------------------------------------------------------

GeometricDuration fit_geometric(std::span<const int> durations) {
  check_durations(durations);
  return GeometricDuration(std::clamp(1.0 / mean_duration(durations), kMinP, kMaxP));
}

NegBinomialDuration fit_negbinomial(std::span<const int> durations) {
  check_durations(durations);
  const double mean = mean_duration(durations);
  int best_n = 1;
  double best_p = std::clamp(1.0 / mean, kMinP, kMaxP);
  double best_ll = kNegInf;
  for (int n = 1; n <= kMaxStages; ++n) {
    const NegBinomialDuration candidate(n, std::clamp(n / mean, kMinP, kMaxP));
    double ll = 0.0;
    for (int d : durations) ll += candidate.log_pmf(d);
    if (ll > best_ll) {
      best_ll = ll;
      best_n = n;
      best_p = candidate.p();
    }
  }
  return NegBinomialDuration(best_n, best_p);
}

std::unique_ptr<ParametricDuration> fit_mle(std::span<const int> durations, DurationFamily family) {
  if (family == DurationFamily::kGeometric) return std::make_unique<GeometricDuration>(fit_geometric(durations));
  return std::make_unique<NegBinomialDuration>(fit_negbinomial(durations));
}

std::vector<int> simulate_durations(const ParametricDuration& model, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> out(count);
  for (int& d : out) d = model.sample(rng);
  return out;
}

// ---------------------------------------------------------------------------

double avg_duration_log_prob(const DurationModel& model, std::span<const ChangeSequence> pieces) {
  double total = 0.0;
  std::size_t segments = 0;
  for (const ChangeSequence& flags : pieces) {
    auto session = model.session();
    StateId state = session->start();
    double running = 0.0;
    for (std::uint8_t f : flags) {
      const FlagLogProbs lp = session->log_probs(state);
      if (f) {
        total += running + lp.change;
        ++segments;
        running = 0.0;
      } else {
        running += lp.stay;
      }
      state = session->advance(state, f != 0);
    }
  }
  if (segments == 0) throw ValidationError("no complete chord segments to score");
  return total / static_cast<double>(segments);
}

std::vector<double> hazard_trace(const DurationModel& model, const ChangeSequence& flags) {
  auto session = model.session();
  std::vector<double> trace;
  trace.reserve(flags.size());
  StateId state = session->start();
  for (std::uint8_t f : flags) {
    trace.push_back(session->hazard(state));
    state = session->advance(state, f != 0);
  }
  return trace;
}

std::unique_ptr<DurationModel> duration_model_from_json(const nlohmann::json& j) {
  try {
    const std::string family = j.at("family").get<std::string>();
    if (family == "geometric") return std::make_unique<GeometricDuration>(j.at("p").get<double>());
    if (family == "negative_binomial") {
      return std::make_unique<NegBinomialDuration>(j.at("n").get<int>(), j.at("p").get<double>());
    }
    if (family == "gru") return std::make_unique<GruDuration>(GruDuration::from_json(j));
    throw ValidationError("unknown duration family '" + family +
                          "' (expected geometric, negative_binomial or gru)");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed duration model JSON: ") + e.what());
  }
}

std::unique_ptr<DurationModel> load_duration_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open duration model " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return duration_model_from_json(j);
}

}  // namespace chordrec
