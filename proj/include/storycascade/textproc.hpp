#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace storycascade {

/// Lowercase tokens made of letters, digits and apostrophes.
using TokenSeq = std::vector<std::string>;

/// Splits on every code point that is not a letter, digit or apostrophe and
/// lowercases. Typographic apostrophes become ASCII ones; apostrophes at the
/// edges of a token are dropped ("'tis" -> "tis", "wolves'" -> "wolves").
TokenSeq tokenize(std::string_view text);

/// Lowercases ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic letters.
/// Other bytes pass through unchanged.
std::string lowercase_utf8(std::string_view text);

/// Splits after '.', '!' or '?' when followed by whitespace or end of text.
/// Sentences are trimmed; empty ones are dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// Exception table + suffix rules. Outputs are fixed points: lemma(lemma(t)) == lemma(t).
class Lemmatizer {
 public:
  /// Uses the built-in exception table.
  Lemmatizer();

  /// Parses "inflected<TAB>lemma" lines ('#' starts a comment). A lemma may
  /// not itself appear as an inflected form.
  static Lemmatizer from_table(std::string_view contents, std::string_view source = "<table>");
  static Lemmatizer from_file(const std::filesystem::path& path);

  std::string operator()(std::string_view token) const;

  std::size_t exception_count() const { return exceptions_.size(); }

 private:
  struct Empty {};
  explicit Lemmatizer(Empty) {}
  void add_table(std::string_view contents, std::string_view source);
  std::string apply_rules(const std::string& word) const;

  std::map<std::string, std::string, std::less<>> exceptions_;
  std::set<std::string, std::less<>> protected_;
};

const Lemmatizer& default_lemmatizer();

/// Lemma with the built-in exception table.
std::string lemma(std::string_view token);

/// Term -> weight map holding only non-zero, finite weights.
class SparseVector {
 public:
  using Map = std::map<std::string, double, std::less<>>;

  /// Zero weights are not stored. Throws std::invalid_argument if not finite.
  void set(std::string term, double weight);
  double get(std::string_view term) const;

  const Map& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double norm() const;
  double dot(const SparseVector& other) const;

 private:
  Map entries_;
};

/// Smooth TF-IDF over the given documents only: raw term count times
/// ln((1 + N) / (1 + df)) + 1, then L2-normalized. Empty documents give empty
/// vectors.
std::vector<SparseVector> tfidf_vectors(std::span<const TokenSeq> docs);

/// Sparse cosine; 0 if either vector is empty.
double cosine(const SparseVector& u, const SparseVector& v);

}  // namespace storycascade
