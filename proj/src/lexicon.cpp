#include <storycascade/lexicon.hpp>

#include <storycascade/core.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace storycascade {

namespace embedded {
extern const std::string_view kSentimentLexicon;
extern const std::string_view kActionLexicon;
}  // namespace embedded

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Fn>
void for_each_data_line(std::string_view contents, std::string_view source, Fn&& fn) {
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    try {
      fn(line);
    } catch (const std::exception& e) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

double parse_real(const std::string& field) {
  std::size_t used = 0;
  const double v = std::stod(field, &used);
  if (used != field.size() || !std::isfinite(v)) throw DataError("bad number \"" + field + "\"");
  return v;
}

}  // namespace

void SentimentLexicon::add(std::string lemma, SentimentEntry entry) {
  if (!(entry.polarity >= -1.0 && entry.polarity <= 1.0)) {
    throw std::invalid_argument("polarity out of [-1, 1] for \"" + lemma + "\"");
  }
  if (!(entry.subjectivity >= 0.0 && entry.subjectivity <= 1.0)) {
    throw std::invalid_argument("subjectivity out of [0, 1] for \"" + lemma + "\"");
  }
  entries_[std::move(lemma)] = entry;
}

const SentimentEntry* SentimentLexicon::find(std::string_view word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

SentimentLexicon SentimentLexicon::parse(std::string_view contents, std::string_view source) {
  SentimentLexicon lex;
  for_each_data_line(contents, source, [&](const std::string& line) {
    std::istringstream fields(line);
    std::string lemma, pol, subj;
    if (!std::getline(fields, lemma, '\t') || !std::getline(fields, pol, '\t') ||
        !std::getline(fields, subj, '\t')) {
      throw DataError("expected lemma<TAB>polarity<TAB>subjectivity");
    }
    lex.add(lemma, {parse_real(pol), parse_real(subj)});
  });
  return lex;
}

SentimentLexicon SentimentLexicon::from_file(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

const SentimentLexicon& SentimentLexicon::builtin() {
  static const SentimentLexicon lex = parse(embedded::kSentimentLexicon, "<built-in sentiment>");
  return lex;
}

void ActionLexicon::add(std::string lemma) {
  if (lemma.empty()) throw std::invalid_argument("empty action lemma");
  for (char c : lemma) {
    if (c >= 'A' && c <= 'Z') throw std::invalid_argument("action lemma not lowercase: " + lemma);
  }
  verbs_.insert(std::move(lemma));
}

ActionLexicon ActionLexicon::parse(std::string_view contents, std::string_view source) {
  ActionLexicon lex;
  for_each_data_line(contents, source, [&](const std::string& line) {
    auto end = line.find_last_not_of(" \t");
    auto begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos) return;
    lex.add(line.substr(begin, end - begin + 1));
  });
  return lex;
}

ActionLexicon ActionLexicon::from_file(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

const ActionLexicon& ActionLexicon::builtin() {
  static const ActionLexicon lex = parse(embedded::kActionLexicon, "<built-in actions>");
  return lex;
}

}  // namespace storycascade
