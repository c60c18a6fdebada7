#include <doctest.h>

#include <storycascade/ensemble.hpp>
#include <storycascade/rng.hpp>

#include <sstream>

#include "temp_dir.hpp"

using namespace storycascade;

namespace {

SignalPair pair_of(SignalVector a, SignalVector b) {
  SignalPair p;
  p.a = a;
  p.b = b;
  return p;
}

SignalVector vec(double a, double b, double c, double d, double e) {
  SignalVector v;
  v << a, b, c, d, e;
  return v;
}

/// Label follows the sign of the first delta; the rest is small noise.
std::vector<TrainingExample> planted(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<TrainingExample> out;
  while (out.size() < n) {
    const double d1 = rng.uniform(-1.0, 1.0);
    if (std::abs(d1) < 0.01) continue;
    TrainingExample ex;
    ex.delta[0] = d1;
    for (int i = 1; i < 5; ++i) ex.delta[i] = rng.uniform(-0.1, 0.1);
    ex.label = d1 > 0 ? 1 : -1;
    out.push_back(ex);
  }
  return out;
}

int sign_formula(const SignalVector& w, const SignalVector& delta) {
  return w.dot(delta) > 0 ? 1 : -1;
}

}  // namespace

TEST_CASE("ensemble score examples") {
  auto s = ensemble_score(pair_of(vec(0.3, 0, 0, 0, 0), vec(0.2, 0, 0, 0, 0)),
                          WeightVector(vec(1, 0, 0, 0, 0)));
  CHECK(s.a == doctest::Approx(0.3));
  CHECK(s.b == doctest::Approx(0.2));
  auto ones = ensemble_score(pair_of(SignalVector::Ones(), SignalVector::Zero()), WeightVector::reference());
  CHECK(ones.a == 1.0);
  auto same = pair_of(vec(0.1, 0.2, 0.3, 0.4, 0.5), vec(0.1, 0.2, 0.3, 0.4, 0.5));
  auto eq = ensemble_score(same, WeightVector::reference());
  CHECK(eq.a == eq.b);
}

TEST_CASE("reference weights") {
  const auto w = WeightVector::reference();
  CHECK(w[0] == 0.49);
  CHECK(w[1] == 0.40);
  CHECK(w[2] == 0.08);
  CHECK(w[3] == 0.02);
  CHECK(w[4] == 0.01);
  CHECK(w.values().sum() == 1.0);
}

TEST_CASE("decide: A only on a strict win") {
  const WeightVector w(vec(1, 0, 0, 0, 0));
  CHECK(decide(pair_of(vec(0.7, 0, 0, 0, 0), vec(0.5, 0, 0, 0, 0)), w) == Label::A);
  CHECK(decide(pair_of(vec(0.5, 0, 0, 0, 0), vec(0.5, 0, 0, 0, 0)), w) == Label::B);
  CHECK(decide(pair_of(vec(0.2, 0, 0, 0, 0), vec(0.4, 0, 0, 0, 0)), w) == Label::B);
}

TEST_CASE("decide is invariant to positive rescaling of the weights") {
  SplitMix64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    SignalVector raw;
    for (int k = 0; k < 5; ++k) raw[k] = rng.uniform();
    SignalPair p;
    for (int k = 0; k < 5; ++k) {
      p.a[k] = rng.uniform(-1, 1);
      p.b[k] = rng.uniform(-1, 1);
    }
    const double c = rng.uniform(0.01, 100.0);
    CHECK(decide(p, SignalVector(c * raw)) == decide(p, raw));
  }
}

TEST_CASE("weight validation") {
  CHECK_THROWS(WeightVector(vec(0.5, 0.5, 0.5, 0, 0)));
  CHECK_THROWS(WeightVector(vec(-0.1, 0.6, 0.5, 0, 0)));
  CHECK_THROWS(WeightVector(vec(std::nan(""), 1, 0, 0, 0)));
  CHECK(WeightVector::normalized(vec(2, 2, 0, 0, 0))[0] == 0.5);
  CHECK(WeightVector::normalized(SignalVector::Zero())[3] == 0.2);
}

TEST_CASE("zero-one loss examples") {
  std::vector<TrainingExample> one = {{vec(1, 0, 0, 0, 0), 1}};
  CHECK(zero_one_loss(WeightVector::reference(), one) == 0);
  one[0].label = -1;
  CHECK(zero_one_loss(WeightVector::reference(), one) == 1);
  CHECK(zero_one_loss(WeightVector::reference(), {}) == 0);
}

TEST_CASE("zero-one loss matches decide per example, ties counted as B") {
  // Exhaustive over a 3-example fixture whose scores tie under some weights.
  // Dyadic values keep both the score and the delta arithmetic exact.
  const std::vector<SignalPair> pairs = {
      pair_of(vec(0.5, 0.25, 0, 0, 0), vec(0.5, 0.25, 0, 0, 0)),
      pair_of(vec(0.75, 0.125, 0, 0, 0), vec(0.5, 0.375, 0, 0, 0)),
      pair_of(vec(0.125, 0.875, 0, 0, 0), vec(0.375, 0.625, 0, 0, 0))};
  const double grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<TrainingExample> data;
    for (int i = 0; i < 3; ++i) {
      data.push_back(TrainingExample::from(pairs[i], (mask >> i) & 1 ? Label::A : Label::B));
    }
    for (double w0 : grid) {
      for (double w1 : grid) {
        const SignalVector w = vec(w0, w1, 0, 0, 0);
        std::size_t by_decide = 0, by_sign = 0;
        for (int i = 0; i < 3; ++i) {
          const Label gold = data[i].label > 0 ? Label::A : Label::B;
          by_decide += decide(pairs[i], w) != gold;
          by_sign += sign_formula(w, data[i].delta) != data[i].label;
        }
        CHECK(zero_one_loss(w, data) == by_decide);
        CHECK(zero_one_loss(w, data) == by_sign);
      }
    }
  }
}

TEST_CASE("differential evolution recovers the planted signal") {
  const auto data = planted(500, 2026);
  CHECK(zero_one_loss(vec(1, 0, 0, 0, 0), data) == 0);
  DeConfig cfg;
  const auto r = fit_weights_de(data, cfg);
  CHECK(r.final_loss == 0);
  for (int i = 1; i < 5; ++i) CHECK(r.weights[0] > r.weights[i]);
  CHECK(r.weights.values().sum() == doctest::Approx(1.0).epsilon(1e-12));

  REQUIRE(r.best_loss_history.size() == static_cast<std::size_t>(cfg.generations) + 1);
  for (std::size_t g = 1; g < r.best_loss_history.size(); ++g) {
    CHECK(r.best_loss_history[g] <= r.best_loss_history[g - 1]);
  }

  const auto again = fit_weights_de(data, cfg);
  CHECK(again.weights.values() == r.weights.values());
  CHECK(again.best_loss_history == r.best_loss_history);
}

TEST_CASE("differential evolution small cases") {
  std::vector<TrainingExample> one = {{vec(0.1, 0, 0, 0, 0), 1}};
  DeConfig cfg;
  cfg.generations = 20;
  CHECK(fit_weights_de(one, cfg).final_loss == 0);

  cfg.generations = 0;
  const auto data = planted(50, 3);
  const auto r = fit_weights_de(data, cfg);
  CHECK(r.best_loss_history.size() == 1);
  CHECK(r.weights.values().sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.final_loss == zero_one_loss(r.weights, data));

  CHECK_THROWS(fit_weights_de({}, DeConfig{}));
}

TEST_CASE("DE configuration validation") {
  auto bad = [](auto mutate) {
    DeConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS(bad([](DeConfig& c) { c.population_size = 3; }).validate());
  CHECK_THROWS(bad([](DeConfig& c) { c.crossover_rate = 1.5; }).validate());
  CHECK_THROWS(bad([](DeConfig& c) { c.mutation_factor = -1; }).validate());
  CHECK_THROWS(bad([](DeConfig& c) { c.generations = -1; }).validate());
  CHECK_THROWS(bad([](DeConfig& c) { c.lower_bound = 1; c.upper_bound = 0; }).validate());
  CHECK_NOTHROW(DeConfig{}.validate());
}

TEST_CASE("weights file round trip and validation") {
  testsupport::TempDir dir;
  WeightsFile f{WeightVector::normalized(vec(0.3, 0.3, 0.2, 0.1, 0.1)), "train.jsonl", 7};
  save_weights(dir / "w.json", f);
  auto back = load_weights(dir / "w.json");
  CHECK(back.weights.values() == f.weights.values());
  CHECK(back.trained_on == "train.jsonl");
  CHECK(back.seed == 7);

  const std::string shipped = std::string(STORYCASCADE_DATA_DIR) + "/weights_reference.json";
  auto ref = load_weights(shipped);
  CHECK(ref.weights.values() == WeightVector::reference().values());
  CHECK(ref.weights.values().sum() == 1.0);

  CHECK_THROWS(parse_weights(R"({"weights":[0.2,0.2,0.2,0.2,0.2],"signal_order":["grammar","lexical","semantic","tension","event"]})"));
  CHECK_THROWS(parse_weights(R"({"weights":[0.5,0.5],"signal_order":["lexical","grammar"]})"));
  CHECK_THROWS(parse_weights(R"({"weights":[0.9,0.2,0.2,0.2,0.2],"signal_order":["lexical","grammar","semantic","tension","event"]})"));
  CHECK_THROWS(parse_weights("not json"));
}
