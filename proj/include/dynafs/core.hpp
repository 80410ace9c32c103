#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dynafs {

using Vec = std::vector<double>;

// Value used for the constant initial observation column and for masked /
// never-observed entries. Features are standardized first, so this sits far
// below the data range.
inline constexpr double kMaskFill = -4.0;

enum class Task { Regression, Classification };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Column-major matrix. Episodes are stored as (n_features x n_ticks) with one
// contiguous column per tick, so a column doubles as a per-tick sample vector.
struct Mat {
  int rows = 0;
  int cols = 0;
  Vec v;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v((size_t)r * c, fill) {}

  double& operator()(int r, int c) { return v[(size_t)c * rows + r]; }
  double operator()(int r, int c) const { return v[(size_t)c * rows + r]; }

  double* col_ptr(int c) { return v.data() + (size_t)c * rows; }
  const double* col_ptr(int c) const { return v.data() + (size_t)c * rows; }

  Vec col(int c) const {
    return Vec(col_ptr(c), col_ptr(c) + rows);
  }
  void set_col(int c, const Vec& x) {
    for (int r = 0; r < rows; ++r) (*this)(r, c) = x[r];
  }
};

// Row-major table for flat sample matrices (rows = samples).
struct Table {
  int n_rows = 0;
  int n_cols = 0;
  Vec v;

  Table() = default;
  Table(int r, int c, double fill = 0.0) : n_rows(r), n_cols(c), v((size_t)r * c, fill) {}

  double& operator()(int r, int c) { return v[(size_t)r * n_cols + c]; }
  double operator()(int r, int c) const { return v[(size_t)r * n_cols + c]; }
  double* row_ptr(int r) { return v.data() + (size_t)r * n_cols; }
  const double* row_ptr(int r) const { return v.data() + (size_t)r * n_cols; }
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG. All draws are built from raw 64-bit outputs of a fixed
// xoshiro-style generator so results do not depend on the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t s = seed;
    for (int i = 0; i < 4; ++i) state_[i] = splitmix64(s += 0x9e3779b97f4a7c15ULL);
  }

  uint64_t next_u64() {
    uint64_t* s = state_;
    uint64_t result = rotl(s[1] * 5, 7) * 9;
    uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return (double)(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  int uniform_int(int n) {
    uint64_t un = (uint64_t)n;
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return (int)(x % un);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int i = (int)v.size() - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[i], v[(size_t)j]);
    }
  }

  // Independent stream derived from the construction seed, not the current
  // state, so per-item streams do not depend on consumption order.
  Rng derive(uint64_t salt) const { return Rng(splitmix64(seed_ ^ splitmix64(salt ^ 0xabcdef1234567890ULL))); }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t seed_;
  uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Worker cap from DYNAFS_THREADS, falling back to hardware concurrency.
int worker_threads();

// Runs fn(0..n-1) on up to worker_threads() threads. Callers must only write
// to per-index slots; reductions happen after the join in index order, which
// keeps results independent of the thread count.
template <class F>
void parallel_for(int n, F&& fn) {
  int nt = worker_threads();
  if (nt > n) nt = n;
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int w = 0; w < nt; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline double mean_of(const Vec& v) {
  if (v.empty()) throw DataError("mean of empty vector");
  double s = 0.0;
  for (double x : v) s += x;
  return s / (double)v.size();
}

// Population standard deviation (divide by n).
inline double stddev_of(const Vec& v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (double)v.size());
}

inline double sigmoid(double z) {
  if (z >= 0.0) {
    double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

}  // namespace dynafs
