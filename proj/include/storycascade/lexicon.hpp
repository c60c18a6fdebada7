#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>

namespace storycascade {

struct SentimentEntry {
  double polarity = 0.0;      // [-1, 1]
  double subjectivity = 0.0;  // [0, 1]
};

/// Lemma -> (polarity, subjectivity). File format: lemma<TAB>polarity<TAB>subjectivity
/// per line, '#' comments.
class SentimentLexicon {
 public:
  SentimentLexicon() = default;

  static SentimentLexicon parse(std::string_view contents, std::string_view source = "<lexicon>");
  static SentimentLexicon from_file(const std::filesystem::path& path);
  /// The built-in English lexicon.
  static const SentimentLexicon& builtin();

  /// Throws std::invalid_argument if either value is outside its range.
  void add(std::string lemma, SentimentEntry entry);
  const SentimentEntry* find(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, SentimentEntry, Hash, std::equal_to<>> entries_;
};

/// Set of action-verb lemmas used to build event chains. File format: one
/// lemma per line, '#' comments.
class ActionLexicon {
 public:
  ActionLexicon() = default;

  static ActionLexicon parse(std::string_view contents, std::string_view source = "<lexicon>");
  static ActionLexicon from_file(const std::filesystem::path& path);
  /// The built-in 47-verb lexicon.
  static const ActionLexicon& builtin();

  void add(std::string lemma);
  bool contains(std::string_view lemma) const { return verbs_.find(lemma) != verbs_.end(); }
  std::size_t size() const { return verbs_.size(); }
  const std::set<std::string, std::less<>>& verbs() const { return verbs_; }

 private:
  std::set<std::string, std::less<>> verbs_;
};

}  // namespace storycascade
