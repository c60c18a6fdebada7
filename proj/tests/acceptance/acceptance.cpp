// Acceptance suite: one PASS/FAIL line per primary criterion.

#include <storycascade/cascade.hpp>
#include <storycascade/embedding.hpp>
#include <storycascade/ensemble.hpp>
#include <storycascade/eval.hpp>
#include <storycascade/rng.hpp>
#include <storycascade/signals.hpp>
#include <storycascade/textproc.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "reference_values.hpp"
#include "stub_servers.hpp"
#include "temp_dir.hpp"

using namespace storycascade;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(const char* name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out.ok && secs >= limit_seconds) {
    out.ok = false;
    out.detail = "runtime " + std::to_string(secs) + " s exceeds " + std::to_string(limit_seconds) + " s";
  }
  if (!out.ok) ++failures;
  std::printf("%s  %-24s %8.3f s  %s\n", out.ok ? "PASS" : "FAIL", name, secs, out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

class ScriptedVoter final : public VoteProvider {
 public:
  explicit ScriptedVoter(std::vector<std::pair<int, int>> script) : script_(std::move(script)) {}
  std::vector<Label> request_votes(const Triplet&, int call_index, int) override {
    ++calls;
    const auto [a, b] = script_.at(static_cast<std::size_t>(call_index));
    std::vector<Label> out(static_cast<std::size_t>(a), Label::A);
    out.insert(out.end(), static_cast<std::size_t>(b), Label::B);
    return out;
  }
  int calls = 0;

 private:
  std::vector<std::pair<int, int>> script_;
};

Outcome cascade_state_machine() {
  Outcome out;
  const CascadeConfig cfg;
  const Triplet t = make_triplet("t", "x", "y", "z");
  int table = 0;
  for (int a = 0; a <= 8; ++a) {
    for (int b = 0; a + b <= 8; ++b) {
      ++table;
      VoteTally tally;
      tally.count_a = a;
      tally.count_b = b;
      const auto d = stage1_decision(tally, cfg);
      out.require(d.has_value() == (std::max(a, b) >= 7), fmt("stage-1 (%g,%g) wrong", a, b));
      if (d) out.require(*d == (a > b ? Label::A : Label::B), fmt("stage-1 (%g,%g) label", a, b));
    }
  }
  out.require(table == 45, "stage-1 table size");

  // Every escalation script over full 8-vote calls: 4 calls, 32 votes, tie iff 16-16.
  SplitMix64 rng(7);
  int ties = 0, escalations = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    std::vector<std::pair<int, int>> script;
    const int first = static_cast<int>(rng.below(5)) + 2;  // 2..6 A votes: no supermajority
    script.push_back({first, 8 - first});
    for (int k = 0; k < 3; ++k) {
      const int a = static_cast<int>(rng.below(9));
      script.push_back({a, 8 - a});
    }
    ScriptedVoter v(script);
    bool tiebreak_called = false;
    const auto r = run_case(t, v, cfg, [&](const Triplet&) {
      tiebreak_called = true;
      return TiebreakResult{Label::B, std::nullopt};
    });
    int pa = 0;
    for (auto [a, b] : script) pa += a;
    ++escalations;
    out.require(v.calls == 4 && r.api_calls == 4, "escalation did not pool exactly 4 calls");
    out.require(r.votes_a + r.votes_b == 32, "pooled votes != 32");
    out.require(r.votes_a == pa, "pooled A count mismatch");
    const bool tie = pa == 16;
    ties += tie;
    out.require((r.pathway == Pathway::SymbolicTie) == tie, "SymbolicTie iff 16-16 violated");
    out.require(tiebreak_called == tie, "tiebreaker invoked outside a tie");
    if (!tie) out.require(r.decision == (pa > 16 ? Label::A : Label::B), "escalated majority label");
  }
  out.require(ties > 0, "no ties exercised");
  if (out.ok) {
    out.detail = "45/45 stage-1 tallies; " + std::to_string(escalations) + " escalations (" +
                 std::to_string(ties) + " ties) pooled 4 calls / 32 votes";
  }
  return out;
}

Outcome simulated_study() {
  Outcome out;
  SimulationConfig cfg;
  cfg.vote_accuracies = {0.5, 0.6, 0.75, 0.9};
  cfg.n_triplets = 5000;
  cfg.seed = 2026;
  const auto rows = simulate_study(cfg);
  std::ostringstream detail;
  detail << "seed 2026, n 5000;";
  for (const auto& row : rows) {
    out.require(std::abs(row.cascade.mean_calls - (1 + 3 * row.split_rate)) <= 0.01,
                fmt("p=%.2f mean calls %.4f vs 1+3*split %.4f", row.vote_accuracy, row.cascade.mean_calls,
                    1 + 3 * row.split_rate));
    if (row.vote_accuracy == 0.5) {
      out.require(std::abs(row.split_rate - 0.9297) <= 0.02, fmt("split rate at p=0.5 is %.4f", row.split_rate));
      detail << fmt(" split(0.5)=%.4f;", row.split_rate);
      continue;
    }
    const double z_cm = paired_z(row.cascade, row.majority);
    const double z_ms = paired_z(row.majority, row.single_vote);
    out.require(row.cascade.accuracy >= row.majority.accuracy && row.majority.accuracy >= row.single_vote.accuracy,
                fmt("p=%.2f ordering violated: %.4f %.4f %.4f", row.vote_accuracy, row.cascade.accuracy,
                    row.majority.accuracy, row.single_vote.accuracy));
    out.require(z_cm >= 3.0, fmt("p=%.2f cascade-majority gap z=%.2f < 3", row.vote_accuracy, z_cm));
    out.require(z_ms >= 3.0, fmt("p=%.2f majority-single gap z=%.2f < 3", row.vote_accuracy, z_ms));
    detail << fmt(" p=%.2f acc %.4f/%.4f/%.4f", row.vote_accuracy, row.single_vote.accuracy,
                  row.majority.accuracy, row.cascade.accuracy)
           << fmt(" z %.1f/%.1f;", z_ms, z_cm);
  }
  if (out.ok) out.detail = detail.str();
  return out;
}

Outcome ensemble_weights() {
  Outcome out;
  const auto file = load_weights(std::string(STORYCASCADE_DATA_DIR) + "/weights_reference.json");
  const auto& w = file.weights.values();
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) sum += w[i];
  out.require(sum == 1.0 && w.sum() == 1.0, fmt("weights sum to %.17g", sum));
  const double expected[5] = {0.49, 0.40, 0.08, 0.02, 0.01};
  for (int i = 0; i < 5; ++i) out.require(w[i] == expected[i], "weights differ from the published values");

  SplitMix64 rng(2026);
  int mismatches = 0, ties = 0;
  for (int n = 0; n < 100000; ++n) {
    SignalPair p;
    for (int i = 0; i < 5; ++i) {
      p.a[i] = rng.uniform(-1, 1);
      p.b[i] = rng.uniform(-1, 1);
    }
    if (n % 10 == 0) {
      p.b = p.a;
      ++ties;
    }
    double sa = 0.0, sb = 0.0;
    for (int i = 0; i < 5; ++i) {
      sa += w[i] * p.a[i];
      sb += w[i] * p.b[i];
    }
    const Label brute = sa > sb ? Label::A : Label::B;
    mismatches += decide(p, file.weights) != brute;
  }
  out.require(mismatches == 0, std::to_string(mismatches) + " decide() mismatches");
  if (out.ok) out.detail = "sum exactly 1; decide == brute-force argmax on 100000 pairs (" + std::to_string(ties) + " exact ties -> B)";
  return out;
}

std::size_t brute_lcs(const EventSeq& x, const EventSeq& y) {
  // Enumerate every subsequence of x and keep the longest one embedded in y.
  std::size_t best = 0;
  const std::size_t n = x.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto len = static_cast<std::size_t>(__builtin_popcount(mask));
    if (len <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < y.size() && y[j] != x[i]) ++j;
      if (j == y.size()) ok = false;
      else ++j;
    }
    if (ok) best = len;
  }
  return best;
}

Outcome lcs_oracle() {
  Outcome out;
  const std::vector<std::string> alphabet = {"fight", "escape", "discover"};
  SplitMix64 rng(2026);
  const int pairs = 12000;
  for (int n = 0; n < pairs; ++n) {
    EventSeq x, y;
    const auto lx = rng.below(11), ly = rng.below(11);
    for (std::size_t i = 0; i < lx; ++i) x.push_back(alphabet[rng.below(3)]);
    for (std::size_t i = 0; i < ly; ++i) y.push_back(alphabet[rng.below(3)]);
    const auto l = brute_lcs(x, y);
    const double expect = (x.empty() || y.empty()) ? 0.0 : 2.0 * l / static_cast<double>(x.size() + y.size());
    out.require(lcs_length(x, y) == l, "lcs_length differs from brute force");
    out.require(event_sim(x, y) == expect, "event_sim differs from brute force");
  }
  if (out.ok) out.detail = std::to_string(pairs) + " random pairs, lengths 0..10, alphabet {fight, escape, discover}";
  return out;
}

std::vector<TrainingExample> planted(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<TrainingExample> out;
  while (out.size() < n) {
    const double d1 = rng.uniform(-1.0, 1.0);
    if (std::abs(d1) < 0.01) continue;
    TrainingExample ex;
    ex.delta[0] = d1;
    for (int i = 1; i < 5; ++i) ex.delta[i] = rng.uniform(-0.1, 0.1);
    ex.label = d1 > 0 ? 1 : -1;
    out.push_back(ex);
  }
  return out;
}

Outcome de_recovery() {
  Outcome out;
  const auto data = planted(500, 2026);
  SignalVector e1 = SignalVector::Zero();
  e1[0] = 1.0;
  out.require(zero_one_loss(e1, data) == 0, "planted set not separable by w=(1,0,0,0,0)");
  DeConfig cfg;
  const auto first = fit_weights_de(data, cfg);
  const auto second = fit_weights_de(data, cfg);
  out.require(first.final_loss == 0, "training loss " + std::to_string(first.final_loss));
  for (int i = 1; i < 5; ++i) out.require(first.weights[0] > first.weights[i], "w1 is not strictly largest");
  out.require(first.weights.values() == second.weights.values(), "two runs differ");
  if (out.ok) {
    std::ostringstream s;
    s.precision(4);
    s << "loss 0 after " << cfg.generations << " generations; w = (";
    for (int i = 0; i < 5; ++i) s << (i ? ", " : "") << first.weights[i];
    s << "); bit-identical rerun";
    out.detail = s.str();
  }
  return out;
}

std::string fuzz_text(SplitMix64& rng, bool force_token) {
  static const std::vector<std::string> words = {
      "the", "wolf", "pig", "fled", "fought", "escaped", "discovering", "happy", "terrible", "dark",
      "love", "hate", "king", "queen", "betrayed", "rescues", "sad", "great", "bad", "good",
      "never", "very", "journeyed", "married", "stole", "won", "lost", "hid", "angry", "calm",
      "café", "naïve", "x", "42", "don't", "it\u2019s", "\u2014", "", "  ", "\n"};
  static const char* terminators[] = {".", "!", "?", "", ",", ";"};
  std::string text;
  const auto sentences = rng.below(12);
  for (std::size_t s = 0; s < sentences; ++s) {
    const auto len = 1 + rng.below(10);
    for (std::size_t w = 0; w < len; ++w) {
      if (!text.empty()) text += rng.bernoulli(0.1) ? "  " : " ";
      text += words[rng.below(words.size())];
    }
    text += terminators[rng.below(std::size(terminators))];
  }
  if (force_token) text += " wolf.";
  return text;
}

std::vector<double> sentence_tensions(const std::string& text, const SentimentLexicon& lex) {
  std::vector<double> out;
  for (const auto& s : split_sentences(text)) {
    if (tokenize(s).empty()) continue;
    out.push_back(tension_curve(s, lex)[0]);
  }
  return out;
}

Outcome signal_properties() {
  Outcome out;
  const HashEmbedder embedder(0);
  const SignalContext ctx{.embedder = embedder};
  const auto& lex = SentimentLexicon::builtin();
  SplitMix64 rng(2026);
  const int n = 10000;
  int nonconstant = 0;
  for (int i = 0; i < n && out.ok; ++i) {
    const std::string anchor = fuzz_text(rng, true);
    const std::string a = fuzz_text(rng, false);
    const std::string b = fuzz_text(rng, false);
    const auto t = make_triplet("f" + std::to_string(i), anchor, a, b);
    const auto p = compute_signal_pair(t, ctx);
    try {
      check_invariants(p);
    } catch (const std::exception& e) {
      out.require(false, std::string("range: ") + e.what());
    }
    const auto q = compute_signal_pair(t.swapped(), ctx);
    out.require(p.a == q.b && p.b == q.a, "swap symmetry broken at case " + std::to_string(i));

    const auto self = compute_signal_pair(make_triplet("s", anchor, anchor, b), ctx);
    out.require(std::abs(self.a[kLexical] - 1.0) <= 1e-6, "lexical self-similarity < 1");
    out.require(std::abs(self.a[kGrammar] - 1.0) <= 1e-6, "grammar self-similarity < 1");
    out.require(std::abs(self.a[kSemantic] - 1.0) <= 1e-6, "semantic self-similarity < 1");
    const auto curve = tension_curve(anchor, lex);
    const bool varies = curve.maxCoeff() != curve.minCoeff();
    nonconstant += varies;
    out.require(self.a[kTension] == (varies ? 1.0 : 0.0) ||
                    (varies && std::abs(self.a[kTension] - 1.0) <= 1e-12),
                fmt("tension self-similarity %.17g (curve range %.17g..%.17g)", self.a[kTension],
                    curve.minCoeff(), curve.maxCoeff()) + " for anchor: " + anchor);
    const bool has_events = !event_sequence(anchor, ActionLexicon::builtin()).empty();
    out.require(self.a[kEvent] == (has_events ? 1.0 : 0.0), "event self-similarity wrong");

    // Interpolation identities against per-sentence tensions.
    const auto ts = sentence_tensions(anchor, lex);
    const auto m = ts.size();
    for (int j = 0; j < 10; ++j) {
      double expect = 0.0;
      if (m == 1) {
        expect = ts[0];
      } else if (m > 1) {
        const double pos = j / 9.0 * static_cast<double>(m - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, m - 1);
        expect = ts[lo] + (pos - static_cast<double>(lo)) * (ts[hi] - ts[lo]);
      }
      out.require(std::abs(curve[j] - expect) <= 1e-12, "tension curve is not the linear interpolant");
      out.require(curve[j] >= 0.0 && curve[j] <= 2.0, "tension outside [0, 2]");
    }
    if (m > 0) {
      out.require(curve[0] == ts.front() && curve[9] == ts.back(), "curve endpoints differ from end sentences");
    }
  }
  if (out.ok) {
    out.detail = std::to_string(n) + " fuzzed triplets (" + std::to_string(nonconstant) +
                 " with varying tension): swap, self-similarity, ranges, interpolation";
  }
  return out;
}

Outcome tfidf_hand_value() {
  Outcome out;
  const std::vector<TokenSeq> docs = {{"wolf", "wolf", "pig"}, {"wolf", "pig"}, {"fox"}};
  const auto v = tfidf_vectors(docs);
  const double c = cosine(v[0], v[1]);
  out.require(std::abs(c - 0.9487) <= 1e-3, fmt("cosine %.6f", c));
  out.require(std::abs(c - refvals::kTfidfFixture) <= 1e-9, fmt("cosine %.12f differs from reference", c));
  const auto sim = lexical_sim(make_triplet("f", "wolf wolf pig", "wolf pig", "fox"));
  out.require(std::abs(sim.a - c) <= 1e-12 && sim.b == 0.0, "lexical_sim disagrees with tfidf fixture");
  if (out.ok) out.detail = fmt("cosine %.6f (reference %.6f)", c, refvals::kTfidfFixture);
  return out;
}

Outcome cache_idempotence() {
  Outcome out;
  testsupport::VoteStub stub([](const std::string& prompt, int n, int request) {
    std::vector<std::string> texts;
    const auto h = fnv1a64(prompt);
    for (int i = 0; i < n; ++i) {
      const auto bit = mix64(h + static_cast<std::uint64_t>(request * 31 + i));
      if (bit % 13 == 0) texts.push_back("cannot decide");
      else texts.push_back(bit & 1 ? "{\"decision\": \"A\"}" : "```json\n{\"decision\": \"b\"}\n```");
    }
    return texts;
  });
  testsupport::TempDir dir;
  std::vector<Triplet> ts;
  const char* stories[] = {"The wolf chased the pig. The pig hid. The wolf attacked. The pig escaped home.",
                           "A fox found a hen. The hen fled. The fox searched. The hen returned safe.",
                           "A king built a castle. Workers arrived. The castle stood for a hundred years."};
  for (int i = 0; i < 60; ++i) {
    ts.push_back(make_triplet("c" + std::to_string(100 + i), stories[i % 3], stories[(i + 1) % 3],
                              stories[(i + 2) % 3], i % 2 ? Label::A : Label::B));
  }
  {
    std::ofstream f(dir / "data.jsonl");
    write_triplets(f, ts);
  }
  RunConfig cfg;
  cfg.dataset = dir / "data.jsonl";
  cfg.provider = ProviderKind::Api;
  cfg.api.endpoint = stub.endpoint();
  cfg.api.cache_path = dir / "votes.jsonl";
  cfg.api.api_key_env = "STORYCASCADE_ACCEPTANCE_KEY";
  cfg.concurrency = 4;
  cfg.out_dir = dir / "cold";
  out.require(cmd_run(cfg) == 0, "cold run failed");
  const int cold_requests = stub.requests();
  out.require(cold_requests >= 60, "cold run issued too few requests");

  cfg.out_dir = dir / "warm";
  out.require(cmd_run(cfg) == 0, "warm run failed");
  const int warm_requests = stub.requests() - cold_requests;
  out.require(warm_requests == 0, std::to_string(warm_requests) + " network requests on the warm run");
  const auto cold = testsupport::slurp(dir / "cold" / "results.jsonl");
  out.require(!cold.empty() && cold == testsupport::slurp(dir / "warm" / "results.jsonl"),
              "warm results differ from cold results");

  cfg.provider = ProviderKind::CachedOnly;
  cfg.out_dir = dir / "offline";
  out.require(cmd_run(cfg) == 0, "cached-only run failed");
  out.require(stub.requests() == cold_requests, "cached-only run touched the network");
  out.require(cold == testsupport::slurp(dir / "offline" / "results.jsonl"), "cached-only results differ");
  if (out.ok) {
    out.detail = std::to_string(cold_requests) + " requests cold, 0 warm, 0 cached-only; results byte-identical";
  }
  return out;
}

}  // namespace

int main() {
  criterion("cascade-state-machine", 1.0, cascade_state_machine);
  criterion("simulated-study", 30.0, simulated_study);
  criterion("ensemble-weights", 60.0, ensemble_weights);
  criterion("lcs-oracle", 10.0, lcs_oracle);
  criterion("de-recovery", 60.0, de_recovery);
  criterion("signal-properties", 60.0, signal_properties);
  criterion("tfidf-hand-value", 60.0, tfidf_hand_value);
  criterion("cache-idempotence", 60.0, cache_idempotence);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
