#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinlab {

// ----- error categories (the CLI maps these onto exit codes) -----

// Bad input: malformed files, violated invariants, out-of-range parameters.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Request exceeds a hard resource cap (lattice size, Hilbert-space dimension).
class budget_error : public std::runtime_error {
 public:
  explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// Threshold solver found no beta with r_plus(beta) < t(beta).
class no_crossing_error : public std::runtime_error {
 public:
  explicit no_crossing_error(const std::string& what) : std::runtime_error(what) {}
};

// ----- numerical estimate with provenance -----

enum class Method { quadrature, enumeration, eigensolve, monte_carlo };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::quadrature:  return "quadrature";
    case Method::enumeration: return "enumeration";
    case Method::eigensolve:  return "eigensolve";
    case Method::monte_carlo: return "monte-carlo";
  }
  return "?";
}

// Value plus an error bound. For the exact engines the bound is a rigorous
// convergence/roundoff estimate, for Monte Carlo it is a standard error.
struct GibbsEstimate {
  double value = 0.0;
  double error = 0.0;
  Method method = Method::quadrature;
  bool converged = true;
  bool autocorr_warning = false;
};

// ----- deterministic streaming pairwise summation -----

// Binary-counter scheme: partial sums of 2^k consecutive terms are combined
// as soon as both halves exist. Result is independent of call-site batching
// and has the usual O(log n) pairwise error growth.
class PairwiseSum {
 public:
  void add(double x) {
    for (std::size_t level = 0;; ++level) {
      if (level == partials_.size()) {
        partials_.push_back(x);
        occupied_.push_back(true);
        return;
      }
      if (!occupied_[level]) {
        partials_[level] = x;
        occupied_[level] = true;
        return;
      }
      x += partials_[level];
      occupied_[level] = false;
    }
  }

  double total() const {
    double s = 0.0;
    for (std::size_t level = 0; level < partials_.size(); ++level)
      if (occupied_[level]) s += partials_[level];
    return s;
  }

  void reset() {
    partials_.clear();
    occupied_.clear();
  }

 private:
  std::vector<double> partials_;
  std::vector<bool> occupied_;
};

// ----- seeded random numbers -----

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Sub-stream seed for instance `index` of a campaign with master seed `seed`.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 1));
}

// mt19937_64 with platform-independent double conversion, so that a fixed
// seed reproduces the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi], inclusive
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // rejection-free modulo is fine here: span is tiny against 2^64
    return lo + static_cast<std::int64_t>(eng_() % span);
  }

 private:
  std::mt19937_64 eng_;
};

// ----- misc -----

inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace spinlab
