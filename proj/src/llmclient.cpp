#include <storycascade/llmclient.hpp>

#include <storycascade/url.hpp>

#include <httplib.h>
#include <json.hpp>

#include <cctype>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <semaphore>
#include <sstream>
#include <thread>

namespace storycascade {

using nlohmann::json;

std::string build_prompt(const Triplet& t) {
  std::string prompt;
  prompt.reserve(t.anchor.text.size() + t.option_a.text.size() + t.option_b.text.size() + 256);
  prompt += kPromptQuestion;
  prompt += "\nAnchor: ";
  prompt += t.anchor.text;
  prompt += "\nStory A: ";
  prompt += t.option_a.text;
  prompt += "\nStory B: ";
  prompt += t.option_b.text;
  prompt += '\n';
  prompt += kPromptInstruction;
  return prompt;
}

namespace {

/// End (one past the closing brace) of the balanced {...} starting at `open`,
/// honoring JSON string quoting. npos if it never closes.
std::size_t matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<Label> label_from_decision(const json& object) {
  auto it = object.find("decision");
  if (it == object.end() || !it->is_string()) return std::nullopt;
  const auto& raw = it->get_ref<const std::string&>();
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
  if (e - b != 1) return std::nullopt;
  const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw[b])));
  if (c == 'A') return Label::A;
  if (c == 'B') return Label::B;
  return std::nullopt;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  if (body.size() <= kMax) return std::string(body);
  return std::string(body.substr(0, kMax)) + "...";
}

}  // namespace

std::optional<Label> parse_decision(std::string_view text) noexcept {
  try {
    std::size_t pos = text.find('{');
    while (pos != std::string_view::npos) {
      const std::size_t end = matching_brace(text, pos);
      if (end != std::string_view::npos) {
        json object = json::parse(text.substr(pos, end - pos), nullptr, false);
        if (!object.is_discarded() && object.is_object()) return label_from_decision(object);
      }
      pos = text.find('{', pos + 1);
    }
  } catch (...) {
  }
  return std::nullopt;
}

std::string serialize_cache_record(const CacheRecord& r) {
  json votes = json::array();
  for (Label v : r.votes) votes.push_back(std::string(to_string(v)));
  json record = {{"triplet_id", r.triplet_id},
                 {"call_index", r.call_index},
                 {"candidates", r.candidates},
                 {"votes", votes},
                 {"timestamp", r.timestamp}};
  // Candidate texts come from the network and may not be valid UTF-8.
  return record.dump(-1, ' ', false, json::error_handler_t::replace);
}

CacheRecord parse_cache_record(std::string_view line) {
  json record = json::parse(line, nullptr, false);
  if (record.is_discarded() || !record.is_object()) throw DataError("malformed cache record");
  try {
    CacheRecord r;
    r.triplet_id = record.at("triplet_id").get<std::string>();
    r.call_index = record.at("call_index").get<int>();
    r.candidates = record.at("candidates").get<std::vector<std::string>>();
    for (const auto& v : record.at("votes")) r.votes.push_back(parse_label(v.get<std::string>()));
    r.timestamp = record.value("timestamp", "");
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed cache record: ") + e.what());
  }
}

VoteCache::VoteCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  if (!in) throw DataError("cannot open vote cache " + path_.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  in.close();

  std::size_t last = lines.size();
  while (last > 0 && lines[last - 1].find_first_not_of(" \t\r") == std::string::npos) --last;
  bool dropped_tail = false;
  for (std::size_t i = 0; i < last; ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    CacheRecord record;
    try {
      record = parse_cache_record(lines[i]);
    } catch (const DataError& e) {
      if (i + 1 == last) {
        dropped_tail = true;
        break;
      }
      throw DataError(path_.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    auto key = std::make_pair(record.triplet_id, record.call_index);
    if (records_.count(key)) {
      throw DataError(path_.string() + ":" + std::to_string(i + 1) + ": duplicate cache key (" +
                      record.triplet_id + ", " + std::to_string(record.call_index) + ")");
    }
    records_.emplace(std::move(key), std::move(record));
  }
  if (dropped_tail) {
    std::cerr << "warning: dropping corrupt trailing record in " << path_.string() << '\n';
    std::ofstream out(path_, std::ios::trunc);
    for (std::size_t i = 0; i + 1 < last; ++i) {
      if (lines[i].find_first_not_of(" \t\r") != std::string::npos) out << lines[i] << '\n';
    }
  }
}

std::optional<CacheRecord> VoteCache::find(const std::string& triplet_id, int call_index) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find({triplet_id, call_index});
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

bool VoteCache::append(const CacheRecord& record) {
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(record.triplet_id, record.call_index);
  if (records_.count(key)) return false;
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw DataError("cannot append to vote cache " + path_.string());
    out << serialize_cache_record(record) << '\n';
    out.flush();
    if (!out) throw DataError("write failed on vote cache " + path_.string());
  }
  records_.emplace(std::move(key), record);
  return true;
}

std::size_t VoteCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

void ProviderConfig::validate() const {
  if (candidates_per_call < 1) throw std::invalid_argument("candidates_per_call must be >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (!offline && endpoint.empty()) throw std::invalid_argument("an endpoint URL is required");
}

struct LlmVoteProvider::Gate {
  explicit Gate(int n) : slots(n) {}
  std::counting_semaphore<> slots;
};

LlmVoteProvider::LlmVoteProvider(ProviderConfig cfg)
    : cfg_(std::move(cfg)), cache_(cfg_.cache_path) {
  cfg_.validate();
  gate_ = std::make_unique<Gate>(cfg_.max_in_flight);
  if (!cfg_.offline) {
    const auto url = split_url(cfg_.endpoint);
    origin_ = url.origin;
    path_ = url.path;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
      api_key_ = key;
    } else {
      std::cerr << "warning: " << cfg_.api_key_env << " is not set; sending unauthenticated requests\n";
    }
  }
}

LlmVoteProvider::~LlmVoteProvider() = default;

std::vector<std::string> LlmVoteProvider::fetch_candidates(const Triplet& triplet,
                                                           int n_candidates) {
  const json request = {{"model", cfg_.model_name},
                        {"prompt", build_prompt(triplet)},
                        {"temperature", cfg_.temperature},
                        {"candidate_count", n_candidates}};
  const std::string body = request.dump(-1, ' ', false, json::error_handler_t::replace);

  std::string last_error;
  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(cfg_.backoff_base * (1 << (attempt - 2)));
    httplib::Result res;
    {
      gate_->slots.acquire();
      httplib::Client client(origin_);
      client.set_connection_timeout(cfg_.timeout);
      client.set_read_timeout(cfg_.timeout);
      client.set_write_timeout(cfg_.timeout);
      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
      ++network_requests_;
      res = client.Post(path_, headers, body, "application/json");
      gate_->slots.release();
    }
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProviderError("vote request for " + triplet.id + " failed with HTTP " +
                          std::to_string(res->status) + ": " + excerpt(res->body));
    }
    json envelope = json::parse(res->body, nullptr, false);
    if (envelope.is_discarded() || !envelope.is_object() || !envelope.contains("candidates") ||
        !envelope["candidates"].is_array()) {
      throw ProviderError("malformed response envelope for " + triplet.id + ": " +
                          excerpt(res->body));
    }
    std::vector<std::string> texts;
    for (const auto& c : envelope["candidates"]) {
      if (static_cast<int>(texts.size()) == n_candidates) break;
      texts.push_back(c.is_string() ? c.get<std::string>() : c.dump());
    }
    return texts;
  }
  throw ProviderError("vote request for " + triplet.id + " failed after " +
                      std::to_string(cfg_.max_attempts) + " attempts: " + last_error);
}

std::vector<Label> LlmVoteProvider::request_votes(const Triplet& triplet, int call_index,
                                                  int n_candidates) {
  if (auto hit = cache_.find(triplet.id, call_index)) {
    if (static_cast<int>(hit->votes.size()) > n_candidates) hit->votes.resize(n_candidates);
    return hit->votes;
  }
  if (cfg_.offline) {
    throw ProviderError("no cached votes for triplet " + triplet.id + ", call " +
                        std::to_string(call_index));
  }
  CacheRecord record;
  record.triplet_id = triplet.id;
  record.call_index = call_index;
  record.candidates = fetch_candidates(triplet, n_candidates);
  for (const auto& text : record.candidates) {
    if (auto label = parse_decision(text)) record.votes.push_back(*label);
  }
  record.timestamp = utc_timestamp();
  if (!cache_.append(record)) {
    // Another request for the same key won the race; keep the stored answer.
    return cache_.find(triplet.id, call_index)->votes;
  }
  return record.votes;
}

}  // namespace storycascade
