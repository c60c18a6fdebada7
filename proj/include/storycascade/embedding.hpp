#pragma once

#include <Eigen/Core>

#include <chrono>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace storycascade {

struct EmbedderInfo {
  std::string name;
  int dim = 0;
};

/// Provider failure, tagged with the provider's name.
class EmbeddingError : public std::runtime_error {
 public:
  EmbeddingError(std::string provider, const std::string& cause)
      : std::runtime_error(provider + ": " + cause), provider_(std::move(provider)) {}
  const std::string& provider() const { return provider_; }

 private:
  std::string provider_;
};

/// Maps texts to unit-norm dense vectors. Implementations must be
/// deterministic per instance and safe to call from several threads.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbedderInfo info() const = 0;
  virtual std::vector<Eigen::VectorXd> embed(std::span<const std::string> texts) const = 0;
};

/// Signed feature hashing of byte 3-grams of the lowercased,
/// whitespace-collapsed text. Texts shorter than three bytes hash as a single
/// gram; blank text maps to the zero vector.
class HashEmbedder final : public EmbeddingProvider {
 public:
  static constexpr int kDefaultDim = 256;

  explicit HashEmbedder(std::uint64_t seed = 0, int dim = kDefaultDim);

  EmbedderInfo info() const override;
  std::vector<Eigen::VectorXd> embed(std::span<const std::string> texts) const override;
  Eigen::VectorXd embed_one(std::string_view text) const;

 private:
  std::uint64_t seed_;
  int dim_;
};

/// Client for a remote encoder speaking POST /embed {"texts": [...]} ->
/// {"embeddings": [[...], ...]} and GET /info -> {"name", "dim"}. Vectors are
/// re-normalized on arrival; a length other than the advertised dim is an error.
class HttpEmbedder final : public EmbeddingProvider {
 public:
  /// Queries /info immediately; throws EmbeddingError if unreachable.
  explicit HttpEmbedder(std::string base_url,
                        std::chrono::milliseconds timeout = std::chrono::seconds(60));

  EmbedderInfo info() const override { return info_; }
  std::vector<Eigen::VectorXd> embed(std::span<const std::string> texts) const override;

 private:
  std::string origin_;
  std::string prefix_;
  std::chrono::milliseconds timeout_;
  EmbedderInfo info_;
};

/// Whitespace runs collapsed to one space, ends trimmed, lowercased.
std::string normalize_for_embedding(std::string_view text);

}  // namespace storycascade
