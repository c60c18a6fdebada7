#pragma once

#include <storycascade/core.hpp>
#include <storycascade/signal_pair.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace storycascade {

/// A vote request that could not be served (transport failure after retries,
/// malformed response, missing cache entry, ...).
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source of A/B votes. call_index is 0 for the first call on a triplet and
/// 1..escalation_calls for the escalation calls. Implementations return at
/// most n_candidates labels (fewer when some candidates were unusable) and
/// must be safe to call concurrently for different triplets.
class VoteProvider {
 public:
  virtual ~VoteProvider() = default;
  virtual std::vector<Label> request_votes(const Triplet& triplet, int call_index,
                                           int n_candidates) = 0;
};

struct VoteTally {
  int count_a = 0;
  int count_b = 0;
  int calls_made = 0;
  /// Calls that returned fewer valid votes than requested.
  int degraded_calls = 0;

  void add(std::span<const Label> votes, int requested);
  int total() const { return count_a + count_b; }
};

struct CascadeConfig {
  int votes_per_call = 8;
  int supermajority_threshold = 7;
  int escalation_calls = 3;

  /// Throws std::invalid_argument unless all fields are positive and the
  /// threshold does not exceed votes_per_call.
  void validate() const;
};

/// Decision after the first call: the leading label when it has at least the
/// supermajority threshold of votes, otherwise nullopt (escalate).
std::optional<Label> stage1_decision(const VoteTally& tally, const CascadeConfig& cfg);

struct TiebreakResult {
  Label decision = Label::B;
  std::optional<SignalPair> signals;
};

using Tiebreaker = std::function<TiebreakResult(const Triplet&)>;

/// Runs one triplet through the cascade: one call, then escalation calls if
/// there is no supermajority, then the tiebreaker if the pooled votes tie.
/// ProviderError propagates to the caller.
CaseResult run_case(const Triplet& triplet, VoteProvider& provider, const CascadeConfig& cfg,
                    const Tiebreaker& tiebreaker);

/// Mean calls per case when a fraction p_split of cases escalates.
double expected_calls(double p_split, const CascadeConfig& cfg);

/// Each vote is independently correct with probability `accuracy`. The stream
/// for a request is derived from (seed, triplet id, call index), so results do
/// not depend on request order or threading.
class SimulatedVoter final : public VoteProvider {
 public:
  SimulatedVoter(std::map<std::string, Label> truth, double accuracy, std::uint64_t seed);

  /// Uses each triplet's gold label as the truth. Throws if one is missing.
  static SimulatedVoter from_gold(std::span<const Triplet> triplets, double accuracy,
                                  std::uint64_t seed);

  std::vector<Label> request_votes(const Triplet& triplet, int call_index,
                                   int n_candidates) override;

 private:
  std::map<std::string, Label> truth_;
  double accuracy_;
  std::uint64_t seed_;
};

}  // namespace storycascade
