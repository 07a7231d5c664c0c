#include "readmit/embedder.hpp"

#include <cctype>
#include <cmath>

#include "readmit/error.hpp"
#include "readmit/rng.hpp"

namespace readmit {

MockEmbedder::MockEmbedder(std::size_t dimension, std::uint64_t seed) : dim_(dimension), seed_(seed) {
  if (dimension == 0) fail(ErrorKind::Config, "embedder dimension must be positive");
}

std::vector<std::string> MockEmbedder::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<double> MockEmbedder::token_vector(std::string_view token) const {
  const std::uint64_t h = fnv1a64(token) ^ splitmix64(seed_);
  std::vector<double> v(dim_);
  double norm2 = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) {
    const std::uint64_t bits = splitmix64(h + 0x632be59bd9b4e019ULL * (k + 1));
    v[k] = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
    norm2 += v[k] * v[k];
  }
  const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
  for (auto& x : v) x *= inv;
  return v;
}

const std::vector<double>& MockEmbedder::cached(const std::string& token) const {
  std::lock_guard lock(mu_);
  auto it = cache_.find(token);
  if (it == cache_.end()) it = cache_.emplace(token, token_vector(token)).first;
  return it->second;
}

std::vector<double> MockEmbedder::embed_tokens(std::span<const std::string> tokens) const {
  if (tokens.size() > max_window()) {
    fail(ErrorKind::Config, "window of " + std::to_string(tokens.size()) + " tokens exceeds " +
                                std::to_string(max_window()));
  }
  std::vector<double> out(dim_, 0.0);
  if (tokens.empty()) return out;
  for (const auto& t : tokens) {
    const auto& v = cached(t);
    for (std::size_t k = 0; k < dim_; ++k) out[k] += v[k];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (auto& x : out) x *= inv;
  return out;
}

}  // namespace readmit
