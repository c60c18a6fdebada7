#include <storycascade/ensemble.hpp>

#include <storycascade/rng.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace storycascade {

using nlohmann::json;

WeightVector::WeightVector(const SignalVector& weights) : w_(weights) {
  if (!w_.allFinite() || (w_.array() < 0.0).any()) {
    throw std::invalid_argument("weights must be finite and non-negative");
  }
  if (std::abs(w_.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("weights must sum to 1 (got " + std::to_string(w_.sum()) + ")");
  }
}

WeightVector WeightVector::normalized(const SignalVector& raw) {
  if (!raw.allFinite() || (raw.array() < 0.0).any()) {
    throw std::invalid_argument("weights must be finite and non-negative");
  }
  const double total = raw.sum();
  if (total == 0.0) return WeightVector(SignalVector::Constant(0.2));
  return WeightVector(raw / total);
}

WeightVector WeightVector::reference() {
  SignalVector w;
  w << 0.49, 0.40, 0.08, 0.02, 0.01;
  return WeightVector(w);
}

EnsembleScores ensemble_score(const SignalPair& s, const WeightVector& w) {
  return {w.values().dot(s.a), w.values().dot(s.b)};
}

Label decide(const SignalPair& s, const SignalVector& raw_weights) {
  return raw_weights.dot(s.a) > raw_weights.dot(s.b) ? Label::A : Label::B;
}

Label decide(const SignalPair& s, const WeightVector& w) { return decide(s, w.values()); }

TrainingExample TrainingExample::from(const SignalPair& signals, Label gold) {
  return {signals.delta(), gold == Label::A ? 1 : -1};
}

std::size_t zero_one_loss(const SignalVector& w, std::span<const TrainingExample> data) {
  std::size_t errors = 0;
  for (const auto& ex : data) {
    const int predicted = w.dot(ex.delta) > 0.0 ? 1 : -1;
    if (predicted != ex.label) ++errors;
  }
  return errors;
}

void DeConfig::validate() const {
  if (population_size < 4) throw std::invalid_argument("DE population_size must be >= 4");
  if (!(mutation_factor > 0.0 && mutation_factor <= 2.0)) {
    throw std::invalid_argument("DE mutation_factor must be in (0, 2]");
  }
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw std::invalid_argument("DE crossover_rate must be in [0, 1]");
  }
  if (generations < 0) throw std::invalid_argument("DE generations must be >= 0");
  if (!(lower_bound >= 0.0 && upper_bound > lower_bound)) {
    throw std::invalid_argument("DE bounds must satisfy 0 <= lower < upper");
  }
}

DeResult fit_weights_de(std::span<const TrainingExample> data, const DeConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("fit_weights_de: no training data");

  constexpr int kDim = 5;
  const int np = cfg.population_size;
  SplitMix64 rng(cfg.rng_seed);

  // Members are columns.
  Eigen::Matrix<double, kDim, Eigen::Dynamic> population(kDim, np);
  std::vector<std::size_t> loss(np);
  for (int i = 0; i < np; ++i) {
    for (int d = 0; d < kDim; ++d) population(d, i) = rng.uniform(cfg.lower_bound, cfg.upper_bound);
    loss[i] = zero_one_loss(SignalVector(population.col(i)), data);
  }

  auto best_index = [&] {
    int best = 0;
    for (int i = 1; i < np; ++i) {
      if (loss[i] < loss[best]) best = i;
    }
    return best;
  };

  DeResult result;
  result.best_loss_history.push_back(loss[best_index()]);

  Eigen::Matrix<double, kDim, Eigen::Dynamic> trials(kDim, np);
  std::vector<std::size_t> trial_loss(np);
  for (int gen = 0; gen < cfg.generations; ++gen) {
    // All trials are drawn from the current population before any selection,
    // so evaluation order cannot change the outcome.
    for (int i = 0; i < np; ++i) {
      int r1, r2, r3;
      do r1 = static_cast<int>(rng.below(np)); while (r1 == i);
      do r2 = static_cast<int>(rng.below(np)); while (r2 == i || r2 == r1);
      do r3 = static_cast<int>(rng.below(np)); while (r3 == i || r3 == r1 || r3 == r2);
      const SignalVector mutant =
          (population.col(r1) + cfg.mutation_factor * (population.col(r2) - population.col(r3)))
              .cwiseMax(cfg.lower_bound)
              .cwiseMin(cfg.upper_bound);
      const auto forced = static_cast<int>(rng.below(kDim));
      for (int d = 0; d < kDim; ++d) {
        const bool take = d == forced || rng.uniform() < cfg.crossover_rate;
        trials(d, i) = take ? mutant[d] : population(d, i);
      }
    }
    for (int i = 0; i < np; ++i) trial_loss[i] = zero_one_loss(SignalVector(trials.col(i)), data);
    for (int i = 0; i < np; ++i) {
      if (trial_loss[i] <= loss[i]) {
        population.col(i) = trials.col(i);
        loss[i] = trial_loss[i];
      }
    }
    result.best_loss_history.push_back(loss[best_index()]);
  }

  result.best_raw = population.col(best_index());
  result.weights = WeightVector::normalized(result.best_raw);
  result.final_loss = zero_one_loss(result.weights, data);
  return result;
}

WeightsFile parse_weights(std::string_view json_text, std::string_view source) {
  auto fail = [&](const std::string& why) {
    return DataError(std::string(source) + ": " + why);
  };
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw fail("not a JSON object");
  if (!doc.contains("signal_order") || !doc["signal_order"].is_array()) {
    throw fail("missing signal_order");
  }
  const auto& order = doc["signal_order"];
  if (order.size() != kSignalNames.size()) throw fail("signal_order must list 5 signals");
  for (std::size_t i = 0; i < kSignalNames.size(); ++i) {
    if (!order[i].is_string() || order[i].get<std::string>() != kSignalNames[i]) {
      throw fail("signal_order must be [lexical, grammar, semantic, tension, event]");
    }
  }
  if (!doc.contains("weights") || !doc["weights"].is_array() || doc["weights"].size() != 5) {
    throw fail("weights must be an array of 5 numbers");
  }
  SignalVector w;
  for (int i = 0; i < 5; ++i) {
    if (!doc["weights"][i].is_number()) throw fail("weights must be numbers");
    w[i] = doc["weights"][i].get<double>();
  }
  WeightsFile out;
  try {
    out.weights = WeightVector(w);
  } catch (const std::invalid_argument& e) {
    throw fail(e.what());
  }
  if (auto it = doc.find("trained_on"); it != doc.end()) {
    if (!it->is_string()) throw fail("trained_on must be a string");
    out.trained_on = it->get<std::string>();
  }
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !it->is_number_integer()) throw fail("seed must be an integer");
    out.seed = it->get<std::uint64_t>();
  }
  return out;
}

WeightsFile load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weights file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_weights(buf.str(), path.string());
}

std::string serialize_weights(const WeightsFile& file) {
  json doc;
  doc["weights"] = json::array();
  for (int i = 0; i < 5; ++i) doc["weights"].push_back(file.weights[i]);
  doc["signal_order"] = json::array();
  for (auto name : kSignalNames) doc["signal_order"].push_back(std::string(name));
  doc["trained_on"] = file.trained_on;
  doc["seed"] = file.seed;
  return doc.dump(2) + "\n";
}

void save_weights(const std::filesystem::path& path, const WeightsFile& file) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write weights file " + path.string());
  out << serialize_weights(file);
}

}  // namespace storycascade
