#pragma once

#include <Eigen/Core>

#include <array>
#include <string_view>

namespace storycascade {

/// One value per similarity signal, in the order lexical, grammar, semantic,
/// tension, event.
using SignalVector = Eigen::Matrix<double, 5, 1>;

enum SignalIndex : int {
  kLexical = 0,
  kGrammar = 1,
  kSemantic = 2,
  kTension = 3,
  kEvent = 4,
};

inline constexpr std::array<std::string_view, 5> kSignalNames = {
    "lexical", "grammar", "semantic", "tension", "event"};

/// Similarity of the anchor to each candidate, per signal.
struct SignalPair {
  SignalVector a = SignalVector::Zero();
  SignalVector b = SignalVector::Zero();

  SignalPair swapped() const { return {b, a}; }
  SignalVector delta() const { return a - b; }
};

/// Throws std::invalid_argument when a score is non-finite or outside its
/// signal's range: [0,1] for lexical and event, [-1,1] otherwise.
void check_invariants(const SignalPair& pair);

}  // namespace storycascade
