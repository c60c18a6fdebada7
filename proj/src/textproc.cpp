#include <storycascade/textproc.hpp>

#include <cmath>
#include <stdexcept>

namespace storycascade {

namespace {

constexpr char32_t kInvalid = 0xFFFD;

/// Decodes one code point starting at text[i] and advances i. Malformed
/// sequences consume one byte and yield U+FFFD.
char32_t next_code_point(std::string_view text, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  const unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kInvalid;
  }
  if (i + len > text.size()) {
    ++i;
    return kInvalid;
  }
  for (int k = 1; k < len; ++k) {
    const unsigned char b = byte(i + k);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return kInvalid;
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x17F) {
    // Latin Extended-A alternates upper/lower, with a parity shift after U+0138
    // and again after U+0149.
    const bool even_upper = (cp <= 0x137) || (cp >= 0x14A && cp <= 0x177);
    const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    if (even_upper && cp % 2 == 0) return cp + 1;
    if (odd_upper && cp % 2 == 1) return cp + 1;
    return cp;
  }
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

/// Letters and digits. Outside ASCII, everything except the punctuation,
/// symbol and space blocks is treated as a word character.
bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  if (cp == kInvalid) return false;
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, math
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp == 0xFEFF) return false;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
  return true;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

void flush_token(std::string& current, TokenSeq& out) {
  std::size_t begin = 0;
  std::size_t end = current.size();
  while (begin < end && current[begin] == '\'') ++begin;
  while (end > begin && current[end - 1] == '\'') --end;
  if (end > begin) out.emplace_back(current.substr(begin, end - begin));
  current.clear();
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string lowercase_utf8(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = next_code_point(text, i);
    if (cp == kInvalid) {
      out.append(text.substr(start, i - start));
    } else {
      append_utf8(out, to_lower(cp));
    }
  }
  return out;
}

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = next_code_point(text, i);
    if (is_apostrophe(cp)) {
      current += '\'';
    } else if (is_word_char(cp)) {
      append_utf8(current, to_lower(cp));
    } else {
      flush_token(current, out);
    }
  }
  flush_token(current, out);
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    auto s = trim(text.substr(start, end - start));
    if (!s.empty()) out.emplace_back(s);
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 == text.size() || is_space(text[i + 1])) emit(i + 1);
  }
  emit(text.size());
  return out;
}

void SparseVector::set(std::string term, double weight) {
  if (!std::isfinite(weight)) throw std::invalid_argument("SparseVector: non-finite weight");
  if (weight == 0.0) {
    entries_.erase(term);
    return;
  }
  entries_[std::move(term)] = weight;
}

double SparseVector::get(std::string_view term) const {
  auto it = entries_.find(term);
  return it == entries_.end() ? 0.0 : it->second;
}

double SparseVector::norm() const {
  double sq = 0.0;
  for (const auto& [term, w] : entries_) sq += w * w;
  return std::sqrt(sq);
}

double SparseVector::dot(const SparseVector& other) const {
  // Merge in key order so that u.dot(v) and v.dot(u) sum identical products
  // in identical order.
  double sum = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      sum += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return sum;
}

std::vector<SparseVector> tfidf_vectors(std::span<const TokenSeq> docs) {
  const auto n_docs = static_cast<double>(docs.size());
  std::vector<std::map<std::string, double, std::less<>>> counts(docs.size());
  std::map<std::string, double, std::less<>> df;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& tok : docs[d]) counts[d][tok] += 1.0;
    for (const auto& [term, c] : counts[d]) df[term] += 1.0;
  }
  std::vector<SparseVector> out(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    double sq = 0.0;
    std::vector<std::pair<std::string, double>> weights;
    for (const auto& [term, tf] : counts[d]) {
      const double idf = std::log((1.0 + n_docs) / (1.0 + df.find(term)->second)) + 1.0;
      weights.emplace_back(term, tf * idf);
      sq += (tf * idf) * (tf * idf);
    }
    const double norm = std::sqrt(sq);
    for (auto& [term, w] : weights) out[d].set(std::move(term), w / norm);
  }
  return out;
}

double cosine(const SparseVector& u, const SparseVector& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double c = u.dot(v) / (nu * nv);
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

}  // namespace storycascade
