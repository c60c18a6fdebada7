#include <storycascade/embedding.hpp>

#include <storycascade/rng.hpp>
#include <storycascade/textproc.hpp>
#include <storycascade/url.hpp>

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <memory>

namespace storycascade {

using nlohmann::json;

std::string normalize_for_embedding(std::string_view text) {
  std::string collapsed;
  collapsed.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (space) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed += ' ';
    pending_space = false;
    collapsed += c;
  }
  return lowercase_utf8(collapsed);
}

HashEmbedder::HashEmbedder(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {
  if (dim <= 0) throw std::invalid_argument("HashEmbedder: dim must be positive");
}

EmbedderInfo HashEmbedder::info() const {
  return {"hash-trigram-" + std::to_string(dim_) + "-seed" + std::to_string(seed_), dim_};
}

Eigen::VectorXd HashEmbedder::embed_one(std::string_view text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  const std::string norm = normalize_for_embedding(text);
  if (norm.empty()) return v;
  const std::uint64_t salt = mix64(seed_);
  auto add_gram = [&](std::string_view gram) {
    const std::uint64_t h = mix64(fnv1a64(gram) ^ salt);
    const auto bucket = static_cast<Eigen::Index>((h >> 1) % static_cast<std::uint64_t>(dim_));
    v[bucket] += (h & 1) ? -1.0 : 1.0;
  };
  if (norm.size() < 3) {
    add_gram(norm);
  } else {
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i) add_gram(std::string_view(norm).substr(i, 3));
  }
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

std::vector<Eigen::VectorXd> HashEmbedder::embed(std::span<const std::string> texts) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

namespace {

std::unique_ptr<httplib::Client> make_client(const std::string& origin,
                                             std::chrono::milliseconds timeout) {
  auto client = std::make_unique<httplib::Client>(origin);
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return client;
}

std::string join_path(const std::string& prefix, std::string_view leaf) {
  if (prefix.empty() || prefix == "/") return std::string(leaf);
  std::string p = prefix;
  if (p.back() == '/') p.pop_back();
  return p + std::string(leaf);
}

}  // namespace

HttpEmbedder::HttpEmbedder(std::string base_url, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  const std::string label = "http-embedder(" + base_url + ")";
  SplitUrl url;
  try {
    url = split_url(base_url);
  } catch (const std::exception& e) {
    throw EmbeddingError(label, e.what());
  }
  origin_ = url.origin;
  prefix_ = url.path;
  auto client = make_client(origin_, timeout_);
  auto res = client->Get(join_path(prefix_, "/info"));
  if (!res) throw EmbeddingError(label, "GET /info failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw EmbeddingError(label, "GET /info returned HTTP " + std::to_string(res->status));
  }
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("name") ||
      !body.contains("dim") || !body["name"].is_string() || !body["dim"].is_number_integer()) {
    throw EmbeddingError(label, "malformed /info body");
  }
  info_.name = body["name"].get<std::string>();
  info_.dim = body["dim"].get<int>();
  if (info_.dim <= 0) throw EmbeddingError(label, "non-positive dim in /info");
}

std::vector<Eigen::VectorXd> HttpEmbedder::embed(std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  auto client = make_client(origin_, timeout_);
  json request = {{"texts", json::array()}};
  for (const auto& t : texts) request["texts"].push_back(t);
  auto res = client->Post(join_path(prefix_, "/embed"),
                          request.dump(-1, ' ', false, json::error_handler_t::replace),
                          "application/json");
  if (!res) throw EmbeddingError(info_.name, "POST /embed failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw EmbeddingError(info_.name, "POST /embed returned HTTP " + std::to_string(res->status));
  }
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("embeddings") ||
      !body["embeddings"].is_array()) {
    throw EmbeddingError(info_.name, "malformed /embed body");
  }
  const auto& rows = body["embeddings"];
  if (rows.size() != texts.size()) {
    throw EmbeddingError(info_.name, "expected " + std::to_string(texts.size()) +
                                         " embeddings, got " + std::to_string(rows.size()));
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != info_.dim) {
      throw EmbeddingError(info_.name, "embedding dimension does not match /info dim " +
                                           std::to_string(info_.dim));
    }
    Eigen::VectorXd v(info_.dim);
    for (int i = 0; i < info_.dim; ++i) {
      if (!row[i].is_number()) throw EmbeddingError(info_.name, "non-numeric embedding value");
      v[i] = row[i].get<double>();
    }
    if (!v.allFinite()) throw EmbeddingError(info_.name, "non-finite embedding value");
    const double n = v.norm();
    if (n > 0.0) v /= n;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace storycascade
