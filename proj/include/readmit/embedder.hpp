#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace readmit {

// Text embedding model abstraction. Implementations must be deterministic
// and always return `dimension()` values.
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::size_t max_window() const { return 512; }
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  // At most max_window() tokens.
  virtual std::vector<double> embed_tokens(std::span<const std::string> tokens) const = 0;
};

// Stand-in for a clinical language model: whitespace tokens, each token
// mapped to a fixed pseudo-random unit vector seeded by a hash of
// (token, seed); a window embeds as the mean of its token vectors.
class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(std::size_t dimension = 768, std::uint64_t seed = 0x5eed);

  std::size_t dimension() const override { return dim_; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::vector<double> embed_tokens(std::span<const std::string> tokens) const override;

  std::vector<double> token_vector(std::string_view token) const;

 private:
  const std::vector<double>& cached(const std::string& token) const;

  std::size_t dim_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, std::vector<double>> cache_;
};

}  // namespace readmit
