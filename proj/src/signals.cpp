#include <storycascade/signals.hpp>

#include <storycascade/numeric.hpp>

#include <algorithm>
#include <cmath>

namespace storycascade {

namespace {

std::vector<Eigen::VectorXd> embed_checked(const EmbeddingProvider& provider,
                                           std::span<const std::string> texts) {
  std::vector<Eigen::VectorXd> out;
  EmbedderInfo info;
  try {
    info = provider.info();
    out = provider.embed(texts);
  } catch (const EmbeddingError&) {
    throw;
  } catch (const std::exception& e) {
    throw EmbeddingError(info.name.empty() ? "embedding provider" : info.name, e.what());
  }
  if (out.size() != texts.size()) {
    throw EmbeddingError(info.name, "returned " + std::to_string(out.size()) + " vectors for " +
                                        std::to_string(texts.size()) + " texts");
  }
  for (const auto& v : out) {
    if (v.size() != info.dim) throw EmbeddingError(info.name, "vector length differs from dim");
  }
  return out;
}

double mean_phase_cosine(std::span<const Eigen::VectorXd> anchor,
                         std::span<const Eigen::VectorXd> other) {
  double sum = 0.0;
  for (std::size_t p = 0; p < 5; ++p) {
    // Two blank phases agree; blank against non-blank stays 0 via cosine.
    const bool both_blank = (anchor[p].array() == 0.0).all() && (other[p].array() == 0.0).all();
    sum += both_blank ? 1.0 : cosine(anchor[p], other[p]);
  }
  return sum / 5.0;
}

bool is_continuation_byte(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

}  // namespace

Similarity lexical_sim(const Triplet& t) {
  const std::array<TokenSeq, 3> docs = {tokenize(t.anchor.text), tokenize(t.option_a.text),
                                        tokenize(t.option_b.text)};
  const auto vecs = tfidf_vectors(docs);
  return {cosine(vecs[0], vecs[1]), cosine(vecs[0], vecs[2])};
}

Similarity semantic_sim(const Triplet& t, const EmbeddingProvider& provider) {
  const std::array<std::string, 3> texts = {t.anchor.text, t.option_a.text, t.option_b.text};
  const auto e = embed_checked(provider, texts);
  return {cosine(e[0], e[1]), cosine(e[0], e[2])};
}

PhaseTexts segment_phases(std::span<const std::string> sentences, std::string_view raw_text) {
  PhaseTexts phases;
  const std::size_t n = sentences.size();
  if (n >= 5) {
    std::size_t begin = 0;
    for (std::size_t k = 1; k <= 5; ++k) {
      const auto end = static_cast<std::size_t>(std::lround(static_cast<double>(k * n) / 5.0));
      std::string& phase = phases[k - 1];
      for (std::size_t i = begin; i < end; ++i) {
        if (!phase.empty()) phase += ' ';
        phase += sentences[i];
      }
      begin = end;
    }
    return phases;
  }
  const std::size_t len = raw_text.size();
  std::size_t begin = 0;
  for (std::size_t k = 1; k <= 5; ++k) {
    auto end = static_cast<std::size_t>(std::lround(static_cast<double>(k * len) / 5.0));
    while (end < len && is_continuation_byte(raw_text[end])) ++end;
    end = std::max(end, begin);
    phases[k - 1] = std::string(raw_text.substr(begin, end - begin));
    begin = end;
  }
  return phases;
}

PhaseTexts segment_phases(std::string_view text) {
  const auto sentences = split_sentences(text);
  return segment_phases(sentences, text);
}

Similarity grammar_sim(const Triplet& t, const EmbeddingProvider& provider) {
  std::vector<std::string> texts;
  for (const Story* s : {&t.anchor, &t.option_a, &t.option_b}) {
    for (auto& phase : segment_phases(s->text)) texts.push_back(std::move(phase));
  }
  const auto e = embed_checked(provider, texts);
  const std::span<const Eigen::VectorXd> all(e);
  return {mean_phase_cosine(all.subspan(0, 5), all.subspan(5, 5)),
          mean_phase_cosine(all.subspan(0, 5), all.subspan(10, 5))};
}

TensionCurve tension_curve(std::string_view text, const SentimentLexicon& lexicon,
                           const Lemmatizer& lemmatizer) {
  std::vector<double> tensions;
  for (const auto& sentence : split_sentences(text)) {
    const auto tokens = tokenize(sentence);
    if (tokens.empty()) continue;
    double polarity = 0.0;
    double subjectivity = 0.0;
    int matched = 0;
    for (const auto& tok : tokens) {
      const SentimentEntry* entry = lexicon.find(tok);
      if (!entry) entry = lexicon.find(lemmatizer(tok));
      if (!entry) continue;
      polarity += entry->polarity;
      subjectivity += entry->subjectivity;
      ++matched;
    }
    if (matched == 0) {
      tensions.push_back(0.0);
    } else {
      tensions.push_back(std::abs(polarity / matched) + subjectivity / matched);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> samples(tensions.data(),
                                                  static_cast<Eigen::Index>(tensions.size()));
  return resample_linear<10>(samples);
}

double tension_sim(const TensionCurve& anchor, const TensionCurve& other) {
  return pearson(anchor, other);
}

EventSeq event_sequence(std::string_view text, const ActionLexicon& lexicon,
                        const Lemmatizer& lemmatizer) {
  EventSeq out;
  for (const auto& tok : tokenize(text)) {
    auto lem = lemmatizer(tok);
    if (lexicon.contains(lem)) out.push_back(std::move(lem));
  }
  return out;
}

std::size_t lcs_length(std::span<const std::string> x, std::span<const std::string> y) {
  if (x.empty() || y.empty()) return 0;
  std::vector<std::size_t> prev(y.size() + 1, 0);
  std::vector<std::size_t> curr(y.size() + 1, 0);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j) {
      curr[j] = x[i - 1] == y[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[y.size()];
}

double event_sim(const EventSeq& x, const EventSeq& y, EventNormalization norm) {
  if (x.empty() || y.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(x, y));
  if (norm == EventNormalization::Max) {
    return lcs / static_cast<double>(std::max(x.size(), y.size()));
  }
  return 2.0 * lcs / static_cast<double>(x.size() + y.size());
}

SignalPair compute_signal_pair(const Triplet& t, const SignalContext& ctx) {
  SignalPair pair;
  const auto lexical = lexical_sim(t);
  pair.a[kLexical] = lexical.a;
  pair.b[kLexical] = lexical.b;

  const std::array<const Story*, 3> stories = {&t.anchor, &t.option_a, &t.option_b};
  std::vector<std::string> texts;
  texts.reserve(18);
  for (const Story* s : stories) texts.push_back(s->text);
  for (const Story* s : stories) {
    for (auto& phase : segment_phases(s->text)) texts.push_back(std::move(phase));
  }
  const auto e = embed_checked(ctx.embedder, texts);
  const std::span<const Eigen::VectorXd> all(e);
  pair.a[kSemantic] = cosine(e[0], e[1]);
  pair.b[kSemantic] = cosine(e[0], e[2]);
  pair.a[kGrammar] = mean_phase_cosine(all.subspan(3, 5), all.subspan(8, 5));
  pair.b[kGrammar] = mean_phase_cosine(all.subspan(3, 5), all.subspan(13, 5));

  const auto curve_anchor = tension_curve(t.anchor.text, ctx.sentiment, ctx.lemmatizer);
  pair.a[kTension] = tension_sim(curve_anchor, tension_curve(t.option_a.text, ctx.sentiment, ctx.lemmatizer));
  pair.b[kTension] = tension_sim(curve_anchor, tension_curve(t.option_b.text, ctx.sentiment, ctx.lemmatizer));

  const auto events_anchor = event_sequence(t.anchor.text, ctx.actions, ctx.lemmatizer);
  pair.a[kEvent] = event_sim(events_anchor, event_sequence(t.option_a.text, ctx.actions, ctx.lemmatizer),
                             ctx.event_norm);
  pair.b[kEvent] = event_sim(events_anchor, event_sequence(t.option_b.text, ctx.actions, ctx.lemmatizer),
                             ctx.event_norm);
  return pair;
}

}  // namespace storycascade
