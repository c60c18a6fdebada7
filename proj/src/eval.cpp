#include <storycascade/eval.hpp>

#include "parallel.hpp"

#include <storycascade/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace storycascade {

namespace {

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
  out.close();
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string pathway_title(Pathway p) {
  switch (p) {
    case Pathway::Supermajority: return "Supermajority";
    case Pathway::EscalatedMajority: return "Escalated (majority)";
    case Pathway::SymbolicTie: return "Escalated (symbolic tie)";
  }
  return "?";
}

std::string percent_or_dash(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *v);
  return buf;
}

void sort_by_id(std::vector<CaseResult>& results) {
  std::sort(results.begin(), results.end(),
            [](const CaseResult& x, const CaseResult& y) { return x.triplet_id < y.triplet_id; });
}

void sort_failures(std::vector<CaseFailure>& failures) {
  std::sort(failures.begin(), failures.end(),
            [](const CaseFailure& x, const CaseFailure& y) { return x.triplet_id < y.triplet_id; });
}

}  // namespace

std::string format6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", round6(value));
  return buf;
}

ProviderKind parse_provider_kind(std::string_view text) {
  if (text == "api") return ProviderKind::Api;
  if (text == "simulated") return ProviderKind::Simulated;
  if (text == "cached-only") return ProviderKind::CachedOnly;
  throw std::invalid_argument("unknown provider \"" + std::string(text) +
                              "\" (expected api, simulated or cached-only)");
}

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderConfig& cfg) {
  if (cfg.url.empty()) return std::make_unique<HashEmbedder>(cfg.hash_seed);
  return std::make_unique<HttpEmbedder>(cfg.url);
}

Tiebreaker make_tiebreaker(const SignalContext& ctx, const WeightVector& weights) {
  return [&ctx, weights](const Triplet& t) {
    TiebreakResult out;
    out.signals = compute_signal_pair(t, ctx);
    out.decision = decide(*out.signals, weights);
    return out;
  };
}

RunOutcome run_cascade(std::span<const Triplet> triplets, VoteProvider& provider,
                       const CascadeConfig& cfg, const Tiebreaker& tiebreaker, int concurrency) {
  cfg.validate();
  std::vector<std::optional<CaseResult>> slots(triplets.size());
  std::vector<std::optional<CaseFailure>> failed(triplets.size());
  detail::parallel_for(triplets.size(), concurrency, [&](std::size_t i) {
    try {
      slots[i] = run_case(triplets[i], provider, cfg, tiebreaker);
    } catch (const ProviderError& e) {
      failed[i] = CaseFailure{triplets[i].id, e.what()};
    } catch (const EmbeddingError& e) {
      failed[i] = CaseFailure{triplets[i].id, e.what()};
    }
  });
  RunOutcome outcome;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (slots[i]) outcome.results.push_back(std::move(*slots[i]));
    if (failed[i]) outcome.failures.push_back(std::move(*failed[i]));
  }
  sort_by_id(outcome.results);
  sort_failures(outcome.failures);
  return outcome;
}

RunOutcome run_symbolic_only(std::span<const Triplet> triplets, const SignalContext& ctx,
                             const WeightVector& weights, int concurrency) {
  const auto matrix = compute_signal_matrix(triplets, ctx, concurrency);
  RunOutcome outcome;
  for (const auto& rec : matrix.records) {
    CaseResult r;
    r.triplet_id = rec.id;
    r.decision = decide(rec.signals, weights);
    r.pathway = Pathway::SymbolicTie;
    r.signals = rec.signals;
    outcome.results.push_back(std::move(r));
  }
  outcome.failures = matrix.failures;
  sort_by_id(outcome.results);
  sort_failures(outcome.failures);
  return outcome;
}

std::string report_csv(const RunReport& report) {
  std::ostringstream out;
  out << "pathway,cases,fraction,labeled,correct,accuracy,mean_api_calls\n";
  for (Pathway p : kAllPathways) {
    const auto& s = report.stats(p);
    out << to_string(p) << ',' << s.count << ',' << format6(s.fraction) << ',' << s.labeled << ','
        << s.correct << ',' << (s.accuracy ? format6(*s.accuracy) : "") << ','
        << format6(s.mean_api_calls) << '\n';
  }
  out << "total," << report.n_cases << ',' << format6(1.0) << ',' << report.labeled << ','
      << report.correct << ','
      << (report.accuracy_overall ? format6(*report.accuracy_overall) : "") << ','
      << format6(report.mean_api_calls) << '\n';
  return out.str();
}

std::string report_table(const RunReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-26s %7s %8s %9s %11s\n", "Pathway", "Cases", "Share",
                "Accuracy", "Calls/case");
  out << line;
  for (Pathway p : kAllPathways) {
    const auto& s = report.stats(p);
    std::snprintf(line, sizeof line, "%-26s %7zu %7.1f%% %9s %11.2f\n", pathway_title(p).c_str(),
                  s.count, 100.0 * round6(s.fraction), percent_or_dash(s.accuracy).c_str(),
                  round6(s.mean_api_calls));
    out << line;
  }
  std::snprintf(line, sizeof line, "%-26s %7zu %7.1f%% %9s %11.2f\n", "Total", report.n_cases,
                100.0, percent_or_dash(report.accuracy_overall).c_str(),
                round6(report.mean_api_calls));
  out << line;
  out << "Labeled cases: " << report.labeled << ", correct: " << report.correct << '\n';
  if (!report.failures.empty()) {
    out << "\nFailed cases (" << report.failures.size() << "):\n";
    for (const auto& f : report.failures) out << "  " << f.triplet_id << ": " << f.cause << '\n';
  }
  return out.str();
}

RunReport write_run_outputs(const std::filesystem::path& out_dir, const RunOutcome& outcome,
                            const std::map<std::string, Label>& gold) {
  std::filesystem::create_directories(out_dir);
  std::string lines;
  for (const auto& r : outcome.results) lines += serialize_case_result(r) + '\n';
  write_file(out_dir / "results.jsonl", lines);

  RunReport report;
  if (!outcome.results.empty()) report = aggregate_report(outcome.results, gold);
  report.failures = outcome.failures;
  write_file(out_dir / "report.csv", report_csv(report));
  write_file(out_dir / "report.txt", report_table(report));
  if (!outcome.failures.empty()) {
    std::string csv = "id,cause\n";
    for (const auto& f : outcome.failures) csv += csv_escape(f.triplet_id) + ',' + csv_escape(f.cause) + '\n';
    write_file(out_dir / "failures.csv", csv);
  } else {
    std::filesystem::remove(out_dir / "failures.csv");
  }
  return report;
}

int cmd_run(const RunConfig& cfg) {
  const auto triplets = load_triplets(cfg.dataset);
  const WeightVector weights =
      cfg.weights.empty() ? WeightVector::reference() : load_weights(cfg.weights).weights;
  const auto embedder = make_embedder(cfg.embedder);
  const SignalContext ctx{.embedder = *embedder};

  RunOutcome outcome;
  if (cfg.symbolic_everywhere) {
    outcome = run_symbolic_only(triplets, ctx, weights, cfg.concurrency);
  } else {
    std::unique_ptr<VoteProvider> provider;
    switch (cfg.provider) {
      case ProviderKind::Simulated:
        provider = std::make_unique<SimulatedVoter>(
            SimulatedVoter::from_gold(triplets, cfg.simulated_accuracy, cfg.seed));
        break;
      case ProviderKind::Api:
        provider = std::make_unique<LlmVoteProvider>(cfg.api);
        break;
      case ProviderKind::CachedOnly: {
        ProviderConfig offline = cfg.api;
        offline.offline = true;
        auto llm = std::make_unique<LlmVoteProvider>(offline);
        for (const auto& t : triplets) {
          if (!llm->cache().find(t.id, 0)) {
            throw ProviderError("cache has no votes for triplet " + t.id + ", call 0");
          }
        }
        provider = std::move(llm);
        break;
      }
    }
    outcome = run_cascade(triplets, *provider, cfg.cascade, make_tiebreaker(ctx, weights),
                          cfg.concurrency);
  }

  if (cfg.emit_signals) {
    std::vector<CaseResult*> missing;
    for (auto& r : outcome.results) {
      if (!r.signals) missing.push_back(&r);
    }
    std::map<std::string, const Triplet*> by_id;
    for (const auto& t : triplets) by_id.emplace(t.id, &t);
    detail::parallel_for(missing.size(), cfg.concurrency, [&](std::size_t i) {
      missing[i]->signals = compute_signal_pair(*by_id.at(missing[i]->triplet_id), ctx);
    });
  }

  write_run_outputs(cfg.out_dir, outcome, gold_labels(triplets));
  return outcome.failures.empty() ? 0 : 1;
}

RunReport cmd_eval(const std::filesystem::path& results, const std::filesystem::path& dataset,
                   const std::filesystem::path& out_dir) {
  auto cases = load_case_results(results);
  const auto triplets = load_triplets(dataset);
  const auto report = aggregate_report(cases, gold_labels(triplets));
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "report.csv", report_csv(report));
  write_file(out_dir / "report.txt", report_table(report));
  return report;
}

SignalMatrix compute_signal_matrix(std::span<const Triplet> triplets, const SignalContext& ctx,
                                   int concurrency) {
  std::vector<std::optional<SignalRecord>> slots(triplets.size());
  std::vector<std::optional<CaseFailure>> failed(triplets.size());
  detail::parallel_for(triplets.size(), concurrency, [&](std::size_t i) {
    const auto& t = triplets[i];
    try {
      slots[i] = SignalRecord{t.id, t.gold, compute_signal_pair(t, ctx)};
    } catch (const EmbeddingError& e) {
      failed[i] = CaseFailure{t.id, e.what()};
    }
  });
  SignalMatrix out;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (slots[i]) out.records.push_back(std::move(*slots[i]));
    if (failed[i]) out.failures.push_back(std::move(*failed[i]));
  }
  return out;
}

std::string signals_csv(std::span<const SignalRecord> records) {
  std::vector<const SignalRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const SignalRecord* x, const SignalRecord* y) { return x->id < y->id; });
  std::ostringstream out;
  out << "id,gold";
  for (const char* side : {"a", "b"}) {
    for (auto name : kSignalNames) out << ',' << name << '_' << side;
  }
  out << '\n';
  for (const auto* r : sorted) {
    out << csv_escape(r->id) << ',' << (r->gold ? to_string(*r->gold) : "");
    for (int i = 0; i < 5; ++i) out << ',' << format6(r->signals.a[i]);
    for (int i = 0; i < 5; ++i) out << ',' << format6(r->signals.b[i]);
    out << '\n';
  }
  return out.str();
}

std::vector<SignalRecord> parse_signals_csv(std::string_view csv, std::string_view source) {
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<SignalRecord> out;
  auto fail = [&](const std::string& why) {
    return DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 12) throw fail("expected 12 columns");
    if (line_no == 1) {
      if (fields[0] != "id") throw fail("missing header");
      continue;
    }
    SignalRecord rec;
    rec.id = fields[0];
    if (!fields[1].empty()) {
      try {
        rec.gold = parse_label(fields[1]);
      } catch (const DataError& e) {
        throw fail(e.what());
      }
    }
    for (int i = 0; i < 10; ++i) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[2 + i], &used);
      } catch (const std::exception&) {
        throw fail("bad number \"" + fields[2 + i] + "\"");
      }
      if (used != fields[2 + i].size()) throw fail("bad number \"" + fields[2 + i] + "\"");
      (i < 5 ? rec.signals.a[i] : rec.signals.b[i - 5]) = v;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<SignalRecord> load_signals_csv(const std::filesystem::path& path) {
  return parse_signals_csv(read_file(path), path.string());
}

int cmd_signals(const SignalsConfig& cfg) {
  const auto triplets = load_triplets(cfg.dataset);
  const auto embedder = make_embedder(cfg.embedder);
  const SignalContext ctx{.embedder = *embedder, .event_norm = cfg.event_norm};
  const auto matrix = compute_signal_matrix(triplets, ctx, cfg.concurrency);
  std::filesystem::create_directories(cfg.out_dir);
  write_file(cfg.out_dir / "signals.csv", signals_csv(matrix.records));
  for (const auto& f : matrix.failures) {
    std::cerr << "signals failed for " << f.triplet_id << ": " << f.cause << '\n';
  }
  return matrix.failures.empty() ? 0 : 1;
}

FitReport fit_weights(std::span<const SignalRecord> records, double holdout_fraction,
                      const DeConfig& de, std::string trained_on) {
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("holdout fraction must be in [0, 1)");
  }
  for (const auto& r : records) {
    if (!r.gold) throw std::invalid_argument("record " + r.id + " has no gold label");
  }
  const std::size_t n = records.size();
  std::size_t n_hold = 0;
  if (holdout_fraction > 0.0) {
    n_hold = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(holdout_fraction * static_cast<double>(n))));
  }
  if (n_hold >= n) {
    throw std::invalid_argument("need at least " + std::to_string(n_hold + 1) +
                                " labeled records for this holdout fraction (have " +
                                std::to_string(n) + ")");
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SplitMix64 rng(derive_seed(de.rng_seed, 0x686f6c646f7574ULL));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  std::vector<TrainingExample> train;
  std::vector<TrainingExample> holdout;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = records[order[k]];
    (k < n_hold ? holdout : train).push_back(TrainingExample::from(r.signals, *r.gold));
  }

  const auto fit = fit_weights_de(train, de);
  FitReport report;
  report.weights = WeightsFile{fit.weights, std::move(trained_on), de.rng_seed};
  report.n_train = train.size();
  report.n_holdout = holdout.size();
  report.train_loss = fit.final_loss;
  report.train_accuracy =
      1.0 - static_cast<double>(fit.final_loss) / static_cast<double>(train.size());
  if (!holdout.empty()) {
    report.holdout_accuracy = 1.0 - static_cast<double>(zero_one_loss(fit.weights, holdout)) /
                                        static_cast<double>(holdout.size());
  }
  return report;
}

std::string fit_report_csv(const FitReport& r) {
  std::ostringstream out;
  out << "split,n,errors,accuracy\n";
  out << "train," << r.n_train << ',' << r.train_loss << ',' << format6(r.train_accuracy) << '\n';
  if (r.holdout_accuracy) {
    const auto errors = static_cast<std::size_t>(
        std::lround((1.0 - *r.holdout_accuracy) * static_cast<double>(r.n_holdout)));
    out << "holdout," << r.n_holdout << ',' << errors << ',' << format6(*r.holdout_accuracy)
        << '\n';
  }
  return out.str();
}

FitReport cmd_fit_weights(const FitConfig& cfg) {
  if (cfg.dataset.empty() == cfg.signals.empty()) {
    throw std::invalid_argument("give exactly one of a dataset or a signals file");
  }
  cfg.de.validate();
  std::vector<SignalRecord> records;
  std::string source;
  if (!cfg.dataset.empty()) {
    const auto triplets = load_triplets(cfg.dataset);
    for (const auto& t : triplets) {
      if (!t.gold) throw DataError("triplet " + t.id + " has no gold label; fitting needs labels");
    }
    const auto embedder = make_embedder(cfg.embedder);
    const SignalContext ctx{.embedder = *embedder, .event_norm = cfg.event_norm};
    auto matrix = compute_signal_matrix(triplets, ctx, cfg.concurrency);
    if (!matrix.failures.empty()) {
      throw EmbeddingError("signals", "failed for " + matrix.failures.front().triplet_id + ": " +
                                          matrix.failures.front().cause);
    }
    records = std::move(matrix.records);
    source = cfg.dataset.filename().string();
  } else {
    records = load_signals_csv(cfg.signals);
    for (const auto& r : records) {
      if (!r.gold) throw DataError("signal record " + r.id + " has no gold label");
    }
    source = cfg.signals.filename().string();
  }
  auto report = fit_weights(records, cfg.holdout_fraction, cfg.de, source);
  std::filesystem::create_directories(cfg.out_dir);
  save_weights(cfg.out_dir / "weights.json", report.weights);
  write_file(cfg.out_dir / "fit_report.csv", fit_report_csv(report));
  return report;
}

}  // namespace storycascade
