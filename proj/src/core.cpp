#include <storycascade/core.hpp>

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace storycascade {

using nlohmann::json;

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string require_string(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) throw DataError(std::string("missing field \"") + field + "\"");
  if (!it->is_string()) throw DataError(std::string("field \"") + field + "\" is not a string");
  return it->get<std::string>();
}

json signals_to_json(const SignalPair& pair) {
  json out = json::object();
  for (int i = 0; i < 5; ++i) {
    out[std::string(kSignalNames[i])] = {round6(pair.a[i]), round6(pair.b[i])};
  }
  return out;
}

SignalPair signals_from_json(const json& in) {
  SignalPair pair;
  for (int i = 0; i < 5; ++i) {
    const json& v = in.at(std::string(kSignalNames[i]));
    pair.a[i] = v.at(0).get<double>();
    pair.b[i] = v.at(1).get<double>();
  }
  return pair;
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::A ? "A" : "B"; }

Label parse_label(std::string_view text) {
  if (text == "A") return Label::A;
  if (text == "B") return Label::B;
  throw DataError("invalid label \"" + std::string(text) + "\" (expected \"A\" or \"B\")");
}

std::string_view to_string(Pathway pathway) {
  switch (pathway) {
    case Pathway::Supermajority: return "supermajority";
    case Pathway::EscalatedMajority: return "escalated_majority";
    case Pathway::SymbolicTie: return "symbolic_tie";
  }
  return "unknown";
}

Pathway parse_pathway(std::string_view text) {
  for (Pathway p : kAllPathways) {
    if (to_string(p) == text) return p;
  }
  throw DataError("invalid pathway \"" + std::string(text) + "\"");
}

Triplet Triplet::swapped() const {
  Triplet t = *this;
  std::swap(t.option_a, t.option_b);
  if (gold) t.gold = other(*gold);
  return t;
}

Triplet make_triplet(std::string id, std::string anchor, std::string option_a,
                     std::string option_b, std::optional<Label> gold) {
  Triplet t;
  t.anchor = {id + "/anchor", std::move(anchor)};
  t.option_a = {id + "/a", std::move(option_a)};
  t.option_b = {id + "/b", std::move(option_b)};
  t.id = std::move(id);
  t.gold = gold;
  return t;
}

std::vector<Triplet> parse_triplets(std::istream& in, std::string_view source) {
  std::vector<Triplet> out;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    auto fail = [&](const std::string& why) -> DataError {
      return DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + why);
    };
    json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded()) throw fail("malformed JSON record");
    if (!record.is_object()) throw fail("record is not a JSON object");
    try {
      auto id = require_string(record, "id");
      auto anchor = require_string(record, "anchor");
      auto a = require_string(record, "option_a");
      auto b = require_string(record, "option_b");
      std::optional<Label> gold;
      if (auto it = record.find("gold"); it != record.end() && !it->is_null()) {
        if (!it->is_string()) throw DataError("field \"gold\" is not a string");
        gold = parse_label(it->get<std::string>());
      }
      for (const auto* text : {&anchor, &a, &b}) {
        if (blank(*text)) throw DataError("story text is empty");
      }
      if (!seen.insert(id).second) throw DataError("duplicate triplet id \"" + id + "\"");
      out.push_back(make_triplet(std::move(id), std::move(anchor), std::move(a),
                                 std::move(b), gold));
    } catch (const DataError& e) {
      throw fail(e.what());
    }
  }
  return out;
}

std::vector<Triplet> load_triplets(const std::filesystem::path& path, DatasetFormat) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return parse_triplets(in, path.string());
}

std::string serialize_triplet(const Triplet& t) {
  json record = {{"id", t.id},
                 {"anchor", t.anchor.text},
                 {"option_a", t.option_a.text},
                 {"option_b", t.option_b.text}};
  if (t.gold) record["gold"] = std::string(to_string(*t.gold));
  return record.dump();
}

void write_triplets(std::ostream& out, std::span<const Triplet> triplets) {
  for (const auto& t : triplets) out << serialize_triplet(t) << '\n';
}

std::map<std::string, Label> gold_labels(std::span<const Triplet> triplets) {
  std::map<std::string, Label> gold;
  for (const auto& t : triplets) {
    if (t.gold) gold.emplace(t.id, *t.gold);
  }
  return gold;
}

void check_invariants(const CaseResult& r) {
  auto fail = [&](const char* why) {
    throw std::logic_error("case " + r.triplet_id + ": " + why);
  };
  if (r.votes_a < 0 || r.votes_b < 0 || r.api_calls < 0) fail("negative count");
  switch (r.pathway) {
    case Pathway::Supermajority:
      if (r.api_calls != 1) fail("supermajority requires exactly one call");
      break;
    case Pathway::EscalatedMajority:
      if (r.api_calls < 2) fail("escalation requires more than one call");
      if (r.votes_a == r.votes_b) fail("escalated majority with tied votes");
      break;
    case Pathway::SymbolicTie:
      if (r.votes_a != r.votes_b) fail("symbolic tie with unequal votes");
      break;
  }
}

RunReport aggregate_report(std::span<const CaseResult> results,
                           const std::map<std::string, Label>& gold) {
  if (results.empty()) throw std::invalid_argument("aggregate_report: no results");
  RunReport report;
  report.n_cases = results.size();
  std::set<std::string_view> ids;
  std::array<double, 3> calls{};
  double total_calls = 0.0;
  for (const auto& r : results) {
    if (!ids.insert(r.triplet_id).second) {
      throw std::invalid_argument("aggregate_report: duplicate triplet id " + r.triplet_id);
    }
    auto& p = report.pathways[static_cast<int>(r.pathway)];
    ++p.count;
    calls[static_cast<int>(r.pathway)] += r.api_calls;
    total_calls += r.api_calls;
    if (auto it = gold.find(r.triplet_id); it != gold.end()) {
      ++report.labeled;
      ++p.labeled;
      if (it->second == r.decision) {
        ++report.correct;
        ++p.correct;
      }
    }
  }
  const auto n = static_cast<double>(report.n_cases);
  for (int i = 0; i < 3; ++i) {
    auto& p = report.pathways[i];
    p.fraction = static_cast<double>(p.count) / n;
    if (p.labeled > 0) p.accuracy = static_cast<double>(p.correct) / static_cast<double>(p.labeled);
    if (p.count > 0) p.mean_api_calls = calls[i] / static_cast<double>(p.count);
  }
  if (report.labeled > 0) {
    report.accuracy_overall =
        static_cast<double>(report.correct) / static_cast<double>(report.labeled);
  }
  report.mean_api_calls = total_calls / n;
  return report;
}

double round6(double value) {
  double r = std::round(value * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no "-0"
}

std::string serialize_case_result(const CaseResult& r) {
  json record = {{"id", r.triplet_id},
                 {"decision", std::string(to_string(r.decision))},
                 {"pathway", std::string(to_string(r.pathway))},
                 {"votes_a", r.votes_a},
                 {"votes_b", r.votes_b},
                 {"api_calls", r.api_calls}};
  if (r.signals) record["signals"] = signals_to_json(*r.signals);
  return record.dump();
}

CaseResult parse_case_result(std::string_view line) {
  json record = json::parse(line, nullptr, false);
  if (record.is_discarded() || !record.is_object()) throw DataError("malformed case result");
  try {
    CaseResult r;
    r.triplet_id = record.at("id").get<std::string>();
    r.decision = parse_label(record.at("decision").get<std::string>());
    r.pathway = parse_pathway(record.at("pathway").get<std::string>());
    r.votes_a = record.at("votes_a").get<int>();
    r.votes_b = record.at("votes_b").get<int>();
    r.api_calls = record.at("api_calls").get<int>();
    if (auto it = record.find("signals"); it != record.end()) r.signals = signals_from_json(*it);
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed case result: ") + e.what());
  }
}

std::vector<CaseResult> load_case_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open results file " + path.string());
  std::vector<CaseResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      out.push_back(parse_case_result(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void check_invariants(const SignalPair& pair) {
  for (const auto* side : {&pair.a, &pair.b}) {
    for (int i = 0; i < 5; ++i) {
      const double v = (*side)[i];
      const bool unit = (i == kLexical || i == kEvent);
      const double lo = unit ? 0.0 : -1.0;
      if (!std::isfinite(v) || v < lo || v > 1.0) {
        throw std::invalid_argument("signal " + std::string(kSignalNames[i]) +
                                    " out of range: " + std::to_string(v));
      }
    }
  }
}

}  // namespace storycascade
