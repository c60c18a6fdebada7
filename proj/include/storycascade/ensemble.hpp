#pragma once

#include <storycascade/core.hpp>
#include <storycascade/signal_pair.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace storycascade {

/// Five non-negative signal weights summing to 1 (within 1e-9).
class WeightVector {
 public:
  /// Throws std::invalid_argument unless every weight is finite and
  /// non-negative and the sum is 1 within 1e-9.
  explicit WeightVector(const SignalVector& weights);

  /// Divides by the sum; an all-zero vector becomes uniform 0.2 weights.
  static WeightVector normalized(const SignalVector& raw);

  /// Lexical 0.49, grammar 0.40, semantic 0.08, tension 0.02, event 0.01.
  static WeightVector reference();

  const SignalVector& values() const { return w_; }
  double operator[](int i) const { return w_[i]; }

 private:
  SignalVector w_;
};

struct EnsembleScores {
  double a = 0.0;
  double b = 0.0;
};

/// score_X = sum_i w_i s_i^X.
EnsembleScores ensemble_score(const SignalPair& signals, const WeightVector& w);

/// A iff score_a > score_b; ties go to B.
Label decide(const SignalPair& signals, const WeightVector& w);
/// Same rule for unnormalized weights.
Label decide(const SignalPair& signals, const SignalVector& raw_weights);

struct TrainingExample {
  SignalVector delta = SignalVector::Zero();  // s^A - s^B
  int label = 1;                              // +1 when A is correct, -1 for B

  static TrainingExample from(const SignalPair& signals, Label gold);
};

/// Count of examples where sign(w . delta) != label, with sign(0) = -1.
std::size_t zero_one_loss(const SignalVector& w, std::span<const TrainingExample> data);
inline std::size_t zero_one_loss(const WeightVector& w, std::span<const TrainingExample> data) {
  return zero_one_loss(w.values(), data);
}

struct DeConfig {
  int population_size = 50;
  double mutation_factor = 0.8;
  double crossover_rate = 0.9;
  int generations = 200;
  double lower_bound = 0.0;
  double upper_bound = 1.0;
  std::uint64_t rng_seed = 2026;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct DeResult {
  WeightVector weights = WeightVector::reference();
  std::size_t final_loss = 0;
  /// Best population loss after initialization (index 0) and after each generation.
  std::vector<std::size_t> best_loss_history;
  /// Best member before normalization.
  SignalVector best_raw = SignalVector::Zero();
};

/// DE/rand/1/bin over the box [lower, upper]^5 minimizing zero_one_loss.
/// Mutants are clamped to the box, crossover forces one gene from the mutant,
/// and a trial replaces its target when its loss is lower or equal. The best
/// member (lowest loss, lowest index) is normalized at the end. Deterministic
/// for a given rng_seed. Throws std::invalid_argument on empty data.
DeResult fit_weights_de(std::span<const TrainingExample> data, const DeConfig& cfg);

/// Contents of a weights file:
/// {"weights": [5], "signal_order": [...], "trained_on": "...", "seed": n}.
struct WeightsFile {
  WeightVector weights = WeightVector::reference();
  std::string trained_on;
  std::uint64_t seed = 0;
};

/// Validates signal_order against lexical, grammar, semantic, tension, event.
WeightsFile parse_weights(std::string_view json_text, std::string_view source = "<weights>");
WeightsFile load_weights(const std::filesystem::path& path);
std::string serialize_weights(const WeightsFile& file);
void save_weights(const std::filesystem::path& path, const WeightsFile& file);

}  // namespace storycascade
