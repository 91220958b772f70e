#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace urllc {

// Uplink / downlink band selector.
enum class Link { Uplink = 0, Downlink = 1 };

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) {
    if (w <= 0.0) throw std::domain_error("watt_to_dbm: nonpositive power");
    return 10.0 * std::log10(w) + 30.0;
}
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Dense (k, m, n) tensor backed by a flat vector, row-major in (k, m, n).
class Tensor3 {
  public:
    Tensor3() = default;
    Tensor3(int k, int m, int n, double fill = 0.0)
        : k_(k), m_(m), n_(n), v_(static_cast<size_t>(k) * m * n, fill) {}

    double &operator()(int k, int m, int n) { return v_[idx(k, m, n)]; }
    double operator()(int k, int m, int n) const { return v_[idx(k, m, n)]; }

    int dim_k() const { return k_; }
    int dim_m() const { return m_; }
    int dim_n() const { return n_; }
    size_t size() const { return v_.size(); }

    std::vector<double> &data() { return v_; }
    const std::vector<double> &data() const { return v_; }

    bool same_shape(const Tensor3 &o) const { return k_ == o.k_ && m_ == o.m_ && n_ == o.n_; }

    double sum() const {
        double s = 0.0;
        for (double x : v_) s += x;
        return s;
    }

  private:
    size_t idx(int k, int m, int n) const {
        return (static_cast<size_t>(k) * m_ + m) * n_ + n;
    }
    int k_ = 0, m_ = 0, n_ = 0;
    std::vector<double> v_;
};

/// splitmix64; used to derive per-realization seeds from a master seed.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// xoshiro-free minimal PRNG wrapper: mt19937_64 output mapped to doubles with
/// a fixed 53-bit recipe so draws do not depend on library internals.
class Rng {
  public:
    explicit Rng(uint64_t seed) : s_(splitmix64(seed)) {}

    uint64_t next_u64() {
        // mt19937_64 kept out on purpose: this generator is 5 lines and the
        // whole draw pipeline stays reproducible across standard libraries.
        uint64_t z = (s_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unit-mean exponential via inversion.
    double next_exp() { return -std::log1p(-next_u01()); }

  private:
    uint64_t s_;
};

} // namespace urllc
