#include <doctest.h>

#include <storycascade/cascade.hpp>

#include <cmath>

using namespace storycascade;

namespace {

/// Replays fixed (a, b) tallies, one per call, and records what was asked.
class ScriptedVoter final : public VoteProvider {
 public:
  explicit ScriptedVoter(std::vector<std::pair<int, int>> script) : script_(std::move(script)) {}

  std::vector<Label> request_votes(const Triplet&, int call_index, int) override {
    call_indices.push_back(call_index);
    const auto [a, b] = script_.at(static_cast<std::size_t>(call_index));
    std::vector<Label> out(static_cast<std::size_t>(a), Label::A);
    out.insert(out.end(), static_cast<std::size_t>(b), Label::B);
    return out;
  }

  std::vector<int> call_indices;

 private:
  std::vector<std::pair<int, int>> script_;
};

Tiebreaker fixed_tiebreak(Label l, int* calls = nullptr) {
  return [l, calls](const Triplet&) {
    if (calls) ++*calls;
    return TiebreakResult{l, std::nullopt};
  };
}

const Triplet kTriplet = make_triplet("t1", "anchor", "a", "b", Label::A);

}  // namespace

TEST_CASE("stage one decisions") {
  CascadeConfig cfg;
  auto decide = [&](int a, int b) {
    VoteTally t;
    t.count_a = a;
    t.count_b = b;
    return stage1_decision(t, cfg);
  };
  CHECK(decide(8, 0) == Label::A);
  CHECK(decide(7, 1) == Label::A);
  CHECK(decide(1, 7) == Label::B);
  CHECK_FALSE(decide(6, 2));
  CHECK_FALSE(decide(5, 3));
  CHECK_FALSE(decide(4, 4));
}

TEST_CASE("all 45 stage-one tallies decide iff the leader has at least 7") {
  CascadeConfig cfg;
  int cases = 0;
  for (int a = 0; a <= 8; ++a) {
    for (int b = 0; a + b <= 8; ++b) {
      ++cases;
      VoteTally t;
      t.count_a = a;
      t.count_b = b;
      const auto d = stage1_decision(t, cfg);
      CHECK(d.has_value() == (std::max(a, b) >= 7));
      if (d) CHECK(*d == (a > b ? Label::A : Label::B));
    }
  }
  CHECK(cases == 45);
}

TEST_CASE("supermajority stops after one call") {
  ScriptedVoter v({{8, 0}});
  auto r = run_case(kTriplet, v, {}, fixed_tiebreak(Label::B));
  CHECK(r.decision == Label::A);
  CHECK(r.pathway == Pathway::Supermajority);
  CHECK(r.api_calls == 1);
  CHECK(v.call_indices == std::vector<int>{0});
  CHECK_NOTHROW(check_invariants(r));
}

TEST_CASE("escalation pools exactly four calls") {
  ScriptedVoter v({{4, 4}, {5, 3}, {4, 4}, {4, 4}});
  auto r = run_case(kTriplet, v, {}, fixed_tiebreak(Label::B));
  CHECK(r.decision == Label::A);
  CHECK(r.pathway == Pathway::EscalatedMajority);
  CHECK(r.votes_a == 17);
  CHECK(r.votes_b == 15);
  CHECK(r.votes_a + r.votes_b == 32);
  CHECK(r.api_calls == 4);
  CHECK(v.call_indices == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("a pooled 16-16 tie goes to the tiebreaker") {
  ScriptedVoter v({{4, 4}, {4, 4}, {4, 4}, {4, 4}});
  int calls = 0;
  auto r = run_case(kTriplet, v, {}, fixed_tiebreak(Label::B, &calls));
  CHECK(calls == 1);
  CHECK(r.pathway == Pathway::SymbolicTie);
  CHECK(r.decision == Label::B);
  CHECK(r.api_calls == 4);
}

TEST_CASE("dropped votes keep the absolute threshold") {
  // 6 of 6 valid votes is not a supermajority of 7.
  ScriptedVoter v({{6, 0}, {3, 3}, {2, 2}, {0, 1}});
  auto r = run_case(kTriplet, v, {}, fixed_tiebreak(Label::B));
  CHECK(r.pathway == Pathway::EscalatedMajority);
  CHECK(r.votes_a == 11);
  CHECK(r.votes_b == 6);
  ScriptedVoter empty({{0, 0}, {0, 0}, {0, 0}, {0, 0}});
  CHECK(run_case(kTriplet, empty, {}, fixed_tiebreak(Label::A)).pathway == Pathway::SymbolicTie);
}

TEST_CASE("a provider returning too many votes is an error") {
  ScriptedVoter v({{9, 0}});
  CHECK_THROWS_AS(run_case(kTriplet, v, {}, fixed_tiebreak(Label::B)), ProviderError);
}

TEST_CASE("custom cascade settings") {
  CascadeConfig cfg{5, 4, 1};
  ScriptedVoter v({{3, 2}, {1, 4}});
  auto r = run_case(kTriplet, v, cfg, fixed_tiebreak(Label::A));
  CHECK(r.pathway == Pathway::EscalatedMajority);
  CHECK(r.decision == Label::B);
  CHECK(r.api_calls == 2);
  CHECK_THROWS((CascadeConfig{8, 9, 3}).validate());
  CHECK_THROWS((CascadeConfig{8, 7, 0}).validate());
}

TEST_CASE("expected calls") {
  CascadeConfig cfg;
  CHECK(expected_calls(0.0, cfg) == 1.0);
  CHECK(expected_calls(1.0, cfg) == 4.0);
  CHECK(expected_calls(0.26, cfg) == doctest::Approx(1.78).epsilon(1e-12));
}

TEST_CASE("simulated voter is deterministic and order independent") {
  std::vector<Triplet> ts;
  for (int i = 0; i < 20; ++i) ts.push_back(make_triplet("s" + std::to_string(i), "x", "y", "z", Label::B));
  auto v1 = SimulatedVoter::from_gold(ts, 0.7, 42);
  auto v2 = SimulatedVoter::from_gold(ts, 0.7, 42);
  std::vector<std::vector<Label>> forward, backward(ts.size());
  for (const auto& t : ts) forward.push_back(v1.request_votes(t, 2, 8));
  for (std::size_t i = ts.size(); i-- > 0;) backward[i] = v2.request_votes(ts[i], 2, 8);
  CHECK(forward == backward);
  CHECK(v1.request_votes(ts[0], 0, 8) != v1.request_votes(ts[0], 1, 8));
  const std::vector<Triplet> unlabeled = {make_triplet("u", "x", "y", "z")};
  CHECK_THROWS_AS(SimulatedVoter::from_gold(unlabeled, 0.7, 1), DataError);
  CHECK_THROWS(SimulatedVoter({}, 1.5, 1));
  CHECK_THROWS_AS(v1.request_votes(make_triplet("nope", "x", "y", "z"), 0, 8), ProviderError);
}

TEST_CASE("perfect voters always reach a supermajority") {
  std::vector<Triplet> ts;
  for (int i = 0; i < 200; ++i) {
    ts.push_back(make_triplet("p" + std::to_string(i), "x", "y", "z", i % 2 ? Label::A : Label::B));
  }
  auto v = SimulatedVoter::from_gold(ts, 1.0, 1);
  for (const auto& t : ts) {
    auto r = run_case(t, v, {}, fixed_tiebreak(Label::B));
    CHECK(r.pathway == Pathway::Supermajority);
    CHECK(r.decision == *t.gold);
    CHECK(r.api_calls == 1);
    CHECK(std::max(r.votes_a, r.votes_b) == 8);
  }
}

TEST_CASE("empirical mean calls track the expected value within three standard errors") {
  for (double p : {0.55, 0.7, 0.85}) {
    const int n = 10000;
    std::vector<Triplet> ts;
    for (int i = 0; i < n; ++i) ts.push_back(make_triplet("m" + std::to_string(i), "x", "y", "z", Label::A));
    auto v = SimulatedVoter::from_gold(ts, p, 2026);
    double calls = 0.0, calls_sq = 0.0;
    int splits = 0;
    for (const auto& t : ts) {
      auto r = run_case(t, v, {}, fixed_tiebreak(Label::B));
      calls += r.api_calls;
      calls_sq += r.api_calls * r.api_calls;
      splits += r.pathway != Pathway::Supermajority;
      CHECK_NOTHROW(check_invariants(r));
    }
    const double mean = calls / n;
    const double se = std::sqrt((calls_sq / n - mean * mean) / n);
    CHECK(std::abs(mean - expected_calls(static_cast<double>(splits) / n, CascadeConfig{})) <=
          3 * se + 1e-12);
  }
}
