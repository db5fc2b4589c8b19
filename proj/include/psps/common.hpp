#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace psps {

/// Input file could not be parsed at all (syntax, missing sections, bad types).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed data violates a model invariant; the message names the invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The switchable-line loop structure does not decompose into independent groups.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario / checkpoint / CLI configuration problem.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal numerical failure (an LP reported infeasible, non-finite loss, ...).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-size bitmask over line (or switchable-line) indices.
///
/// Backed by 64-bit words so it can key hash maps cheaply; sized at
/// construction, never grows.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t n, bool value = false)
      : n_(n), words_((n + 63) / 64, value ? ~std::uint64_t{0} : 0) {
    trim();
  }

  std::size_t size() const { return n_; }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

  void set(std::size_t i, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (value)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }

  bool all() const { return count() == n_; }
  bool none() const { return count() == 0; }

  /// True if this is a subset of other (used for the absorbing-availability check).
  bool subset_of(const Bitset& other) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & ~other.words_[k]) return false;
    return true;
  }

  Bitset operator&(const Bitset& other) const {
    Bitset out(n_);
    for (std::size_t k = 0; k < words_.size(); ++k)
      out.words_[k] = words_[k] & other.words_[k];
    return out;
  }

  bool operator==(const Bitset& other) const {
    return n_ == other.n_ && words_ == other.words_;
  }
  bool operator!=(const Bitset& other) const { return !(*this == other); }

  const std::vector<std::uint64_t>& words() const { return words_; }

  std::uint64_t hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ n_;
    for (auto w : words_) {
      h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }

 private:
  void trim() {
    if (n_ & 63) words_.back() &= (std::uint64_t{1} << (n_ & 63)) - 1;
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Runs fn(i) for i in [0, n) across `workers` threads. Results must be written
/// to pre-sized slots so the outcome is independent of scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// FNV-1a over a byte string; used for scenario fingerprints.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace psps
