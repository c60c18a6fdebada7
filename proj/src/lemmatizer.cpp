#include <storycascade/textproc.hpp>

#include <storycascade/core.hpp>

#include <fstream>
#include <sstream>

namespace storycascade {

namespace embedded {
extern const std::string_view kLemmaExceptions;
}

namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool is_consonant(char c) { return c >= 'a' && c <= 'z' && !is_vowel(c); }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool has_vowel(std::string_view s) {
  for (char c : s) {
    if (is_vowel(c) || c == 'y') return true;
  }
  return false;
}

/// "stopp" -> "stop"; ll, ss, zz and ff stay doubled ("kill", "pass").
bool undouble(std::string& stem) {
  const auto n = stem.size();
  if (n < 3) return false;
  const char c = stem[n - 1];
  if (c != stem[n - 2] || !is_consonant(c)) return false;
  if (c == 'l' || c == 's' || c == 'z' || c == 'f') return false;
  stem.pop_back();
  return true;
}

/// Whether a stem left by stripping -ed/-ing needs its final e back
/// ("escap" -> "escape", "struggl" -> "struggle", "rescu" -> "rescue").
bool wants_final_e(std::string_view stem) {
  const auto n = stem.size();
  if (n < 2) return false;
  const char last = stem[n - 1];
  const char prev = stem[n - 2];
  if (last == 'v' || last == 'c') return true;
  if (last == 'u') return is_consonant(prev);
  if (last == 'z') return prev != 'z';
  if (last == 's') return is_vowel(prev);
  if (last == 'l') {
    return prev == 'b' || prev == 'c' || prev == 'd' || prev == 'f' || prev == 'g' ||
           prev == 'k' || prev == 'p' || prev == 't' || prev == 'z';
  }
  if (last == 'r') return n >= 4 && prev == 'u' && is_consonant(stem[n - 3]);
  // consonant-vowel-consonant with a plosive or m at the end
  if (n >= 3 && is_vowel(prev) && is_consonant(stem[n - 3])) {
    return last == 'p' || last == 't' || last == 'd' || last == 'k' || last == 'b' ||
           last == 'm' || last == 'g';
  }
  return false;
}

/// One suffix-rule step. Returns the word unchanged when no rule applies.
std::string suffix_step(const std::string& w) {
  const auto n = w.size();
  if (ends_with(w, "'s") && n > 2) return w.substr(0, n - 2);
  if (n <= 3) return w;
  if (ends_with(w, "ies") && n > 4) return w.substr(0, n - 3) + "y";
  if (ends_with(w, "ied") && n > 4) return w.substr(0, n - 3) + "y";
  if (ends_with(w, "es")) {
    const std::string stem = w.substr(0, n - 2);
    const bool sibilant = ends_with(stem, "ss") || ends_with(stem, "zz") ||
                          ends_with(stem, "ch") || ends_with(stem, "sh") ||
                          ends_with(stem, "x") || ends_with(stem, "o");
    return sibilant ? stem : w.substr(0, n - 1);
  }
  if (ends_with(w, "ed") && n > 4) {
    std::string stem = w.substr(0, n - 2);
    if (stem.back() == 'e' || !has_vowel(stem)) return w;  // "need", "speed"
    if (!undouble(stem) && wants_final_e(stem)) stem += 'e';
    return stem;
  }
  if (ends_with(w, "ing") && n > 5) {
    std::string stem = w.substr(0, n - 3);
    if (!has_vowel(stem)) return w;  // "string", "bring"
    if (!undouble(stem) && wants_final_e(stem)) stem += 'e';
    return stem;
  }
  if (w.back() == 's') {
    const char prev = w[n - 2];
    if (prev == 's' || prev == 'u' || prev == 'i' || prev == '\'') return w;
    return w.substr(0, n - 1);
  }
  return w;
}

}  // namespace

Lemmatizer::Lemmatizer() { add_table(embedded::kLemmaExceptions, "<built-in>"); }

Lemmatizer Lemmatizer::from_table(std::string_view contents, std::string_view source) {
  Lemmatizer lem{Empty{}};
  lem.add_table(contents, source);
  return lem;
}

Lemmatizer Lemmatizer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lemma table " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_table(buf.str(), path.string());
}

void Lemmatizer::add_table(std::string_view contents, std::string_view source) {
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    const auto where = std::string(source) + ":" + std::to_string(line_no);
    if (tab == std::string::npos) throw DataError(where + ": expected inflected<TAB>lemma");
    std::string inflected = line.substr(0, tab);
    std::string base = line.substr(tab + 1);
    if (inflected.empty() || base.empty()) throw DataError(where + ": empty field");
    exceptions_[std::move(inflected)] = base;
    protected_.insert(std::move(base));
  }
  for (const auto& base : protected_) {
    auto it = exceptions_.find(base);
    if (it != exceptions_.end() && it->second != base) {
      throw DataError(std::string(source) + ": lemma \"" + base +
                      "\" is also listed as an inflected form");
    }
  }
}

std::string Lemmatizer::apply_rules(const std::string& word) const {
  // Iterate to a fixed point; every step shortens the word, so this ends.
  std::string current = word;
  for (;;) {
    if (auto it = exceptions_.find(current); it != exceptions_.end()) return it->second;
    if (protected_.count(current)) return current;
    std::string next = suffix_step(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::string Lemmatizer::operator()(std::string_view token) const {
  return apply_rules(std::string(token));
}

const Lemmatizer& default_lemmatizer() {
  static const Lemmatizer instance;
  return instance;
}

std::string lemma(std::string_view token) { return default_lemmatizer()(token); }

}  // namespace storycascade
