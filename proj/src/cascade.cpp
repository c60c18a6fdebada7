#include <storycascade/cascade.hpp>

#include <storycascade/rng.hpp>

namespace storycascade {

void VoteTally::add(std::span<const Label> votes, int requested) {
  for (Label v : votes) (v == Label::A ? count_a : count_b) += 1;
  ++calls_made;
  if (static_cast<int>(votes.size()) < requested) ++degraded_calls;
}

void CascadeConfig::validate() const {
  if (votes_per_call <= 0 || supermajority_threshold <= 0 || escalation_calls <= 0) {
    throw std::invalid_argument("cascade settings must be positive");
  }
  if (supermajority_threshold > votes_per_call) {
    throw std::invalid_argument("supermajority threshold exceeds votes per call");
  }
}

std::optional<Label> stage1_decision(const VoteTally& tally, const CascadeConfig& cfg) {
  if (tally.count_a >= cfg.supermajority_threshold && tally.count_a > tally.count_b) return Label::A;
  if (tally.count_b >= cfg.supermajority_threshold && tally.count_b > tally.count_a) return Label::B;
  return std::nullopt;
}

CaseResult run_case(const Triplet& triplet, VoteProvider& provider, const CascadeConfig& cfg,
                    const Tiebreaker& tiebreaker) {
  auto call = [&](VoteTally& tally, int call_index) {
    const auto votes = provider.request_votes(triplet, call_index, cfg.votes_per_call);
    if (static_cast<int>(votes.size()) > cfg.votes_per_call) {
      throw ProviderError("provider returned more votes than requested for " + triplet.id);
    }
    tally.add(votes, cfg.votes_per_call);
  };

  CaseResult result;
  result.triplet_id = triplet.id;
  VoteTally tally;
  call(tally, 0);
  if (auto decided = stage1_decision(tally, cfg)) {
    result.decision = *decided;
    result.pathway = Pathway::Supermajority;
  } else {
    for (int k = 1; k <= cfg.escalation_calls; ++k) call(tally, k);
    if (tally.count_a != tally.count_b) {
      result.decision = tally.count_a > tally.count_b ? Label::A : Label::B;
      result.pathway = Pathway::EscalatedMajority;
    } else {
      auto tie = tiebreaker(triplet);
      result.decision = tie.decision;
      result.signals = std::move(tie.signals);
      result.pathway = Pathway::SymbolicTie;
    }
  }
  result.votes_a = tally.count_a;
  result.votes_b = tally.count_b;
  result.api_calls = tally.calls_made;
  return result;
}

double expected_calls(double p_split, const CascadeConfig& cfg) {
  return 1.0 + static_cast<double>(cfg.escalation_calls) * p_split;
}

SimulatedVoter::SimulatedVoter(std::map<std::string, Label> truth, double accuracy,
                               std::uint64_t seed)
    : truth_(std::move(truth)), accuracy_(accuracy), seed_(seed) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw std::invalid_argument("simulated vote accuracy must be in [0, 1]");
  }
}

SimulatedVoter SimulatedVoter::from_gold(std::span<const Triplet> triplets, double accuracy,
                                         std::uint64_t seed) {
  std::map<std::string, Label> truth;
  for (const auto& t : triplets) {
    if (!t.gold) throw DataError("simulated voter needs a gold label for " + t.id);
    truth.emplace(t.id, *t.gold);
  }
  return SimulatedVoter(std::move(truth), accuracy, seed);
}

std::vector<Label> SimulatedVoter::request_votes(const Triplet& triplet, int call_index,
                                                 int n_candidates) {
  auto it = truth_.find(triplet.id);
  if (it == truth_.end()) throw ProviderError("simulated voter has no truth for " + triplet.id);
  SplitMix64 rng(derive_seed(derive_seed(seed_, fnv1a64(triplet.id)),
                             static_cast<std::uint64_t>(call_index)));
  std::vector<Label> votes;
  votes.reserve(n_candidates);
  for (int i = 0; i < n_candidates; ++i) {
    votes.push_back(rng.bernoulli(accuracy_) ? it->second : other(it->second));
  }
  return votes;
}

}  // namespace storycascade
