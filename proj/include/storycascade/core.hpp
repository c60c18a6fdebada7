#pragma once

#include <storycascade/signal_pair.hpp>

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace storycascade {

/// Raised for malformed input files and records.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Label { A, B };

std::string_view to_string(Label label);
/// Accepts exactly "A" or "B".
Label parse_label(std::string_view text);
inline Label other(Label label) { return label == Label::A ? Label::B : Label::A; }

enum class Pathway { Supermajority, EscalatedMajority, SymbolicTie };

inline constexpr std::array<Pathway, 3> kAllPathways = {
    Pathway::Supermajority, Pathway::EscalatedMajority, Pathway::SymbolicTie};

std::string_view to_string(Pathway pathway);
Pathway parse_pathway(std::string_view text);

struct Story {
  std::string id;
  std::string text;
};

struct Triplet {
  std::string id;
  Story anchor;
  Story option_a;
  Story option_b;
  std::optional<Label> gold;

  /// Same triplet with the candidates exchanged (gold flipped accordingly).
  Triplet swapped() const;
};

/// Builds a triplet whose story ids are derived from the triplet id.
Triplet make_triplet(std::string id, std::string anchor, std::string option_a,
                     std::string option_b, std::optional<Label> gold = std::nullopt);

enum class DatasetFormat { Jsonl };

/// Reads one triplet per line: {"id", "anchor", "option_a", "option_b", "gold"?}.
/// Blank lines are skipped. Errors name the offending line number.
std::vector<Triplet> load_triplets(const std::filesystem::path& path,
                                   DatasetFormat format = DatasetFormat::Jsonl);
std::vector<Triplet> parse_triplets(std::istream& in, std::string_view source = "<stream>");

std::string serialize_triplet(const Triplet& triplet);
void write_triplets(std::ostream& out, std::span<const Triplet> triplets);

std::map<std::string, Label> gold_labels(std::span<const Triplet> triplets);

struct CaseResult {
  std::string triplet_id;
  Label decision = Label::A;
  Pathway pathway = Pathway::Supermajority;
  int votes_a = 0;
  int votes_b = 0;
  /// Zero only for symbolic-only runs that bypass the vote provider.
  int api_calls = 0;
  std::optional<SignalPair> signals;
};

/// Throws std::logic_error if the pathway, vote and call counts disagree.
void check_invariants(const CaseResult& result);

/// A case the provider could not complete. Never dropped silently.
struct CaseFailure {
  std::string triplet_id;
  std::string cause;
};

struct PathwayStats {
  std::size_t count = 0;
  double fraction = 0.0;
  std::size_t labeled = 0;
  std::size_t correct = 0;
  std::optional<double> accuracy;
  double mean_api_calls = 0.0;
};

struct RunReport {
  std::size_t n_cases = 0;
  std::size_t labeled = 0;
  std::size_t correct = 0;
  /// Over cases with a gold label only; empty when nothing is labeled.
  std::optional<double> accuracy_overall;
  std::array<PathwayStats, 3> pathways{};
  double mean_api_calls = 0.0;
  std::vector<CaseFailure> failures;

  const PathwayStats& stats(Pathway p) const { return pathways[static_cast<int>(p)]; }
};

/// Throws std::invalid_argument on an empty result set or duplicate ids.
RunReport aggregate_report(std::span<const CaseResult> results,
                           const std::map<std::string, Label>& gold);

/// Rounds to 6 decimal places; used for every real written to an output file.
double round6(double value);

/// One JSON line per case. Signals, when present, are rounded to 6 decimals.
std::string serialize_case_result(const CaseResult& result);
CaseResult parse_case_result(std::string_view line);
std::vector<CaseResult> load_case_results(const std::filesystem::path& path);

}  // namespace storycascade
