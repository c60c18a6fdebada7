#pragma once

#include <storycascade/cascade.hpp>
#include <storycascade/core.hpp>

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace storycascade {

inline constexpr std::string_view kPromptQuestion =
    "Which story (A or B) is more similar to the Anchor story?";
inline constexpr std::string_view kPromptInstruction =
    "Return your decision as JSON with a \"decision\" field set to either \"A\" or \"B\".";

/// Question, "Anchor: ...", "Story A: ...", "Story B: ...", instruction, joined by newlines.
std::string build_prompt(const Triplet& triplet);

/// Finds the first well-formed JSON object in the text (code fences and prose
/// around it are fine) and reads its "decision" field, trimmed and
/// case-folded. Anything else is unparseable (nullopt). Never throws.
std::optional<Label> parse_decision(std::string_view candidate_text) noexcept;

struct CacheRecord {
  std::string triplet_id;
  int call_index = 0;
  std::vector<std::string> candidates;
  std::vector<Label> votes;
  std::string timestamp;
};

std::string serialize_cache_record(const CacheRecord& record);
CacheRecord parse_cache_record(std::string_view line);

/// Append-only vote cache, one record per line, keyed by (triplet_id,
/// call_index). A corrupt final line (an interrupted append) is dropped and
/// the file rewritten on open; corruption anywhere else is an error. Safe for
/// concurrent use.
class VoteCache {
 public:
  explicit VoteCache(std::filesystem::path path);

  std::optional<CacheRecord> find(const std::string& triplet_id, int call_index) const;
  /// Writes the record unless its key is already present; returns whether it
  /// was written.
  bool append(const CacheRecord& record);
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, int>, CacheRecord> records_;
};

struct ProviderConfig {
  /// Full URL of the vote endpoint, e.g. http://localhost:8080/v1/votes.
  std::string endpoint;
  /// Name of the environment variable holding the API key.
  std::string api_key_env = "STORYCASCADE_API_KEY";
  std::string model_name = "default";
  double temperature = 1.0;
  int candidates_per_call = 8;
  std::chrono::milliseconds timeout{60000};
  std::filesystem::path cache_path;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  int max_in_flight = 8;
  /// Serve from the cache only; a miss is a ProviderError.
  bool offline = false;

  void validate() const;
};

/// VoteProvider over the neutral completion endpoint:
///   POST {"model", "prompt", "temperature", "candidate_count"} -> {"candidates": [text, ...]}
/// Every fresh response is appended to the cache before votes are returned.
class LlmVoteProvider final : public VoteProvider {
 public:
  explicit LlmVoteProvider(ProviderConfig cfg);
  ~LlmVoteProvider() override;

  std::vector<Label> request_votes(const Triplet& triplet, int call_index,
                                   int n_candidates) override;

  /// HTTP requests issued so far (including retries).
  std::size_t network_requests() const { return network_requests_.load(); }
  const VoteCache& cache() const { return cache_; }

 private:
  std::vector<std::string> fetch_candidates(const Triplet& triplet, int n_candidates);

  ProviderConfig cfg_;
  std::string api_key_;
  std::string origin_;
  std::string path_;
  VoteCache cache_;
  std::atomic<std::size_t> network_requests_{0};
  struct Gate;
  std::unique_ptr<Gate> gate_;
};

}  // namespace storycascade
