#pragma once

#include <storycascade/cascade.hpp>
#include <storycascade/core.hpp>
#include <storycascade/ensemble.hpp>
#include <storycascade/llmclient.hpp>
#include <storycascade/signals.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace storycascade {

enum class ProviderKind { Api, Simulated, CachedOnly };

ProviderKind parse_provider_kind(std::string_view text);

/// Which embedding provider the signals use.
struct EmbedderConfig {
  /// Remote encoder base URL; the seeded hash embedder when empty.
  std::string url;
  std::uint64_t hash_seed = 0;
};

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderConfig& cfg);

struct RunConfig {
  std::filesystem::path dataset;
  ProviderKind provider = ProviderKind::Simulated;
  /// Reference weights when empty.
  std::filesystem::path weights;
  std::uint64_t seed = 2026;
  std::filesystem::path out_dir = "out";
  int concurrency = 4;
  /// Decide every case with the ensemble alone; no votes are requested.
  bool symbolic_everywhere = false;
  /// Attach signals to every case, not only to ties.
  bool emit_signals = false;
  CascadeConfig cascade;
  /// Per-vote accuracy of the simulated provider.
  double simulated_accuracy = 0.75;
  ProviderConfig api;
  EmbedderConfig embedder;
};

struct RunOutcome {
  std::vector<CaseResult> results;  // sorted by triplet id
  std::vector<CaseFailure> failures;
};

/// Ensemble tiebreaker over the given signal context and weights.
Tiebreaker make_tiebreaker(const SignalContext& ctx, const WeightVector& weights);

/// Runs every triplet through the cascade on up to `concurrency` worker
/// threads. Provider errors become failures; other exceptions propagate.
RunOutcome run_cascade(std::span<const Triplet> triplets, VoteProvider& provider,
                       const CascadeConfig& cfg, const Tiebreaker& tiebreaker,
                       int concurrency = 1);

/// Ensemble-only decisions: pathway symbolic_tie, no votes, zero calls.
RunOutcome run_symbolic_only(std::span<const Triplet> triplets, const SignalContext& ctx,
                             const WeightVector& weights, int concurrency = 1);

/// Report as CSV: pathway,cases,fraction,labeled,correct,accuracy,mean_api_calls,
/// one row per pathway plus a total row.
std::string report_csv(const RunReport& report);
/// Human-readable table with the same content, plus any failures.
std::string report_table(const RunReport& report);

/// Writes results.jsonl, report.csv and report.txt (and failures.csv when
/// there are failures) under out_dir. Returns the report.
RunReport write_run_outputs(const std::filesystem::path& out_dir, const RunOutcome& outcome,
                            const std::map<std::string, Label>& gold);

/// Full `run` subcommand. Returns the process exit code: 0 iff no case failed.
int cmd_run(const RunConfig& cfg);

/// Scores an existing results.jsonl against a dataset's gold labels and
/// writes report.csv / report.txt to out_dir.
RunReport cmd_eval(const std::filesystem::path& results, const std::filesystem::path& dataset,
                   const std::filesystem::path& out_dir);

struct SignalRecord {
  std::string id;
  std::optional<Label> gold;
  SignalPair signals;
};

/// Signals for every triplet, in input order. Per-triplet embedding failures
/// are collected instead of aborting the batch.
struct SignalMatrix {
  std::vector<SignalRecord> records;
  std::vector<CaseFailure> failures;
};

SignalMatrix compute_signal_matrix(std::span<const Triplet> triplets, const SignalContext& ctx,
                                   int concurrency = 1);

/// CSV: id,gold,lexical_a,...,event_a,lexical_b,...,event_b, sorted by id, 6 decimals.
std::string signals_csv(std::span<const SignalRecord> records);
std::vector<SignalRecord> parse_signals_csv(std::string_view csv, std::string_view source = "<csv>");
std::vector<SignalRecord> load_signals_csv(const std::filesystem::path& path);

struct SignalsConfig {
  std::filesystem::path dataset;
  std::filesystem::path out_dir = "out";
  int concurrency = 4;
  EmbedderConfig embedder;
  EventNormalization event_norm = EventNormalization::Dice;
};

/// `signals` subcommand: writes signals.csv. Returns the exit code.
int cmd_signals(const SignalsConfig& cfg);

struct FitConfig {
  /// Exactly one of dataset / signals is set.
  std::filesystem::path dataset;
  std::filesystem::path signals;
  std::filesystem::path out_dir = "out";
  double holdout_fraction = 0.1;
  DeConfig de;
  int concurrency = 4;
  EmbedderConfig embedder;
  EventNormalization event_norm = EventNormalization::Dice;
};

struct FitReport {
  WeightsFile weights;
  std::size_t n_train = 0;
  std::size_t n_holdout = 0;
  std::size_t train_loss = 0;
  double train_accuracy = 0.0;
  std::optional<double> holdout_accuracy;
};

/// Shuffles with de.rng_seed, holds out round(fraction * n) records (at least
/// one when the fraction is positive), fits on the rest. Throws
/// std::invalid_argument if a record lacks gold or either split is empty.
FitReport fit_weights(std::span<const SignalRecord> records, double holdout_fraction,
                      const DeConfig& de, std::string trained_on);

std::string fit_report_csv(const FitReport& report);

/// `fit-weights` subcommand: writes weights.json and fit_report.csv.
FitReport cmd_fit_weights(const FitConfig& cfg);

/// One arm of the simulated comparison.
struct SimulationArm {
  std::string system;
  double accuracy = 0.0;
  double mean_calls = 0.0;
  std::vector<std::uint8_t> correct;  // per case, for paired statistics
};

struct SimulationRow {
  double vote_accuracy = 0.0;
  std::size_t n = 0;
  double split_rate = 0.0;
  SimulationArm single_vote;
  SimulationArm majority;  // majority of the first 8 votes, 4-4 broken by a fair coin
  SimulationArm cascade;
};

struct SimulationConfig {
  std::vector<double> vote_accuracies = {0.6, 0.68, 0.75, 0.9};
  std::size_t n_triplets = 5000;
  std::uint64_t seed = 2026;
  CascadeConfig cascade;
  /// Probability the tiebreaker picks the gold label; 0.5 is a fair coin.
  double tiebreak_accuracy = 0.5;
};

/// Synthetic triplets with random gold labels voted on by SimulatedVoter. All
/// three arms see the same votes, so their accuracies compare pairwise.
std::vector<SimulationRow> simulate_study(const SimulationConfig& cfg);

/// Columns: vote_accuracy,system,n,accuracy,mean_calls,split_rate.
std::string simulation_csv(std::span<const SimulationRow> rows);

/// Paired z statistic of mean(better - worse) over per-case correctness.
double paired_z(const SimulationArm& better, const SimulationArm& worse);

/// Fixed 6-decimal rendering used in every CSV.
std::string format6(double value);

}  // namespace storycascade
