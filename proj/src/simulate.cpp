#include <storycascade/eval.hpp>

#include <storycascade/rng.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace storycascade {

namespace {

constexpr std::uint64_t kGoldStream = 0x676f6c64ULL;
constexpr std::uint64_t kMajorityCoin = 0x6d616a6fULL;
constexpr std::uint64_t kTieCoin = 0x74696562ULL;

SimulationArm finish(std::string name, std::vector<std::uint8_t> correct, double calls) {
  SimulationArm arm;
  arm.system = std::move(name);
  std::size_t hits = 0;
  for (auto c : correct) hits += c;
  arm.accuracy = correct.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(correct.size());
  arm.mean_calls = calls;
  arm.correct = std::move(correct);
  return arm;
}

}  // namespace

std::vector<SimulationRow> simulate_study(const SimulationConfig& cfg) {
  cfg.cascade.validate();
  if (cfg.n_triplets == 0) throw std::invalid_argument("simulation needs at least one triplet");
  if (!(cfg.tiebreak_accuracy >= 0.0 && cfg.tiebreak_accuracy <= 1.0)) {
    throw std::invalid_argument("tiebreak accuracy must be in [0, 1]");
  }

  std::vector<Triplet> triplets;
  std::map<std::string, Label> truth;
  triplets.reserve(cfg.n_triplets);
  for (std::size_t i = 0; i < cfg.n_triplets; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "sim-%06zu", i);
    SplitMix64 g(derive_seed(derive_seed(cfg.seed, kGoldStream), i));
    const Label gold = g.bernoulli(0.5) ? Label::A : Label::B;
    triplets.push_back(make_triplet(id, "anchor", "option a", "option b", gold));
    truth.emplace(id, gold);
  }

  const int k = cfg.cascade.votes_per_call;
  std::vector<SimulationRow> rows;
  for (double p : cfg.vote_accuracies) {
    SimulatedVoter voter(truth, p, cfg.seed);
    std::vector<std::uint8_t> single(cfg.n_triplets), majority(cfg.n_triplets),
        cascade(cfg.n_triplets);
    std::size_t splits = 0;
    std::size_t calls = 0;

    for (std::size_t i = 0; i < cfg.n_triplets; ++i) {
      const Triplet& t = triplets[i];
      const Label gold = *t.gold;
      const auto first = voter.request_votes(t, 0, k);
      single[i] = !first.empty() && first.front() == gold;

      int a = 0;
      for (Label v : first) a += v == Label::A;
      const int b = static_cast<int>(first.size()) - a;
      Label maj;
      if (a != b) {
        maj = a > b ? Label::A : Label::B;
      } else {
        SplitMix64 coin(derive_seed(derive_seed(cfg.seed, kMajorityCoin), i));
        maj = coin.bernoulli(0.5) ? Label::A : Label::B;
      }
      majority[i] = maj == gold;

      const Tiebreaker tiebreak = [&](const Triplet&) {
        SplitMix64 coin(derive_seed(derive_seed(cfg.seed, kTieCoin), i));
        return TiebreakResult{coin.bernoulli(cfg.tiebreak_accuracy) ? gold : other(gold), {}};
      };
      const auto result = run_case(t, voter, cfg.cascade, tiebreak);
      cascade[i] = result.decision == gold;
      splits += result.pathway != Pathway::Supermajority;
      calls += static_cast<std::size_t>(result.api_calls);
    }

    const double n = static_cast<double>(cfg.n_triplets);
    SimulationRow row;
    row.vote_accuracy = p;
    row.n = cfg.n_triplets;
    row.split_rate = static_cast<double>(splits) / n;
    row.single_vote = finish("single_vote", std::move(single), 1.0);
    row.majority = finish("majority_8", std::move(majority), 1.0);
    row.cascade = finish("cascade", std::move(cascade), static_cast<double>(calls) / n);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string simulation_csv(std::span<const SimulationRow> rows) {
  std::ostringstream out;
  out << "vote_accuracy,system,n,accuracy,mean_calls,split_rate\n";
  for (const auto& row : rows) {
    for (const SimulationArm* arm : {&row.single_vote, &row.majority, &row.cascade}) {
      out << format6(row.vote_accuracy) << ',' << arm->system << ',' << row.n << ','
          << format6(arm->accuracy) << ',' << format6(arm->mean_calls) << ','
          << format6(row.split_rate) << '\n';
    }
  }
  return out.str();
}

double paired_z(const SimulationArm& better, const SimulationArm& worse) {
  if (better.correct.size() != worse.correct.size() || better.correct.empty()) {
    throw std::invalid_argument("paired_z needs two arms over the same non-empty cases");
  }
  const double n = static_cast<double>(better.correct.size());
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < better.correct.size(); ++i) {
    const double d = static_cast<double>(better.correct[i]) - static_cast<double>(worse.correct[i]);
    sum += d;
    sum_sq += d * d;
  }
  const double mean = sum / n;
  const double var = n > 1 ? (sum_sq - n * mean * mean) / (n - 1) : 0.0;
  const double se = std::sqrt(std::max(var, 0.0) / n);
  if (se == 0.0) {
    if (mean == 0.0) return 0.0;
    return mean > 0 ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
  }
  return mean / se;
}

}  // namespace storycascade
