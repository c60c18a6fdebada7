#pragma once

#include <storycascade/core.hpp>
#include <storycascade/embedding.hpp>
#include <storycascade/lexicon.hpp>
#include <storycascade/signal_pair.hpp>
#include <storycascade/textproc.hpp>

#include <Eigen/Core>

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace storycascade {

/// Similarity of the anchor to option A and to option B for one signal.
struct Similarity {
  double a = 0.0;
  double b = 0.0;
};

/// Tension sampled at 10 evenly spaced story positions; each value in [0, 2].
using TensionCurve = Eigen::Matrix<double, 10, 1>;

/// Ordered action-verb lemmas.
using EventSeq = std::vector<std::string>;

using PhaseTexts = std::array<std::string, 5>;

/// Cosine of TF-IDF vectors fitted on the triplet's three stories.
Similarity lexical_sim(const Triplet& triplet);

/// Cosine of whole-story embeddings.
Similarity semantic_sim(const Triplet& triplet, const EmbeddingProvider& provider);

/// Setting, conflict, rising action, climax and resolution. With n >= 5
/// sentences the cut points are round(k n / 5), k = 1..4; shorter texts are
/// cut into five equal character slices instead (snapped to UTF-8 boundaries).
PhaseTexts segment_phases(std::span<const std::string> sentences, std::string_view raw_text);
PhaseTexts segment_phases(std::string_view text);

/// Mean over the five aligned phases of the phase-embedding cosine.
Similarity grammar_sim(const Triplet& triplet, const EmbeddingProvider& provider);

/// Per-sentence |mean polarity| + mean subjectivity over lexicon matches (a
/// token matches directly or through its lemma), resampled to 10 points.
/// Sentences without any word token are ignored.
TensionCurve tension_curve(std::string_view text, const SentimentLexicon& lexicon,
                           const Lemmatizer& lemmatizer = default_lemmatizer());

/// Pearson correlation of two curves; 0 if either is flat.
double tension_sim(const TensionCurve& anchor, const TensionCurve& other);

/// Lemmas of the tokens whose lemma is in the lexicon, in text order.
EventSeq event_sequence(std::string_view text, const ActionLexicon& lexicon,
                        const Lemmatizer& lemmatizer = default_lemmatizer());

std::size_t lcs_length(std::span<const std::string> x, std::span<const std::string> y);

enum class EventNormalization {
  Dice,  // 2 LCS / (|x| + |y|)
  Max,   // LCS / max(|x|, |y|)
};

/// LCS similarity of two event chains; 0 if either is empty.
double event_sim(const EventSeq& x, const EventSeq& y,
                 EventNormalization norm = EventNormalization::Dice);

/// Everything the five signals depend on besides the triplet itself.
struct SignalContext {
  const EmbeddingProvider& embedder;
  const SentimentLexicon& sentiment = SentimentLexicon::builtin();
  const ActionLexicon& actions = ActionLexicon::builtin();
  const Lemmatizer& lemmatizer = default_lemmatizer();
  EventNormalization event_norm = EventNormalization::Dice;
};

/// All five signals for both candidates. Embeddings for the three stories and
/// their fifteen phases go to the provider as one batch. Provider failures are
/// rethrown as EmbeddingError.
SignalPair compute_signal_pair(const Triplet& triplet, const SignalContext& ctx);

}  // namespace storycascade
