#pragma once

#include "picmot/fg_group.hpp"
#include "picmot/rng.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace picmot::field {

using std::int64_t;

/// Multiplicative unit of F_p, stored as its representative in [1, p-1].
struct Unit {
  int64_t value = 1;

  bool operator==(const Unit& o) const { return value == o.value; }
  bool operator!=(const Unit& o) const { return value != o.value; }
};

inline bool is_prime(int64_t n) {
  if (n < 2) return false;
  for (int64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

/// F_p with a fixed multiplicative generator, the anchor for the canonical
/// isomorphism between k* and Z/(p-1) used throughout.
class PrimeField {
 public:
  /// Picks the smallest primitive root mod p.
  explicit PrimeField(int64_t p) : p_(p) {
    if (p < 5 || p > 100000) throw std::invalid_argument("p out of supported range [5, 100000]");
    if (!is_prime(p)) throw std::invalid_argument("p is not prime");
    generator_ = find_generator(p);
    build_dlog_table();
  }

  int64_t p() const { return p_; }
  Unit generator() const { return Unit{generator_}; }

  int64_t reduce(int64_t x) const {
    int64_t r = x % p_;
    return r < 0 ? r + p_ : r;
  }

  Unit unit(int64_t x) const {
    int64_t r = reduce(x);
    if (r == 0) throw std::invalid_argument("zero is not a unit");
    return Unit{r};
  }

  Unit one() const { return Unit{1}; }

  Unit mul(Unit a, Unit b) const { return Unit{a.value * b.value % p_}; }
  Unit inv(Unit a) const { return pow(a, p_ - 2); }
  Unit div(Unit a, Unit b) const { return mul(a, inv(b)); }

  Unit pow(Unit a, int64_t e) const {
    int64_t ord = p_ - 1;
    int64_t r = e % ord;
    if (r < 0) r += ord;
    int64_t base = a.value, acc = 1;
    while (r > 0) {
      if (r & 1) acc = acc * base % p_;
      base = base * base % p_;
      r >>= 1;
    }
    return Unit{acc};
  }

  Unit pow(Unit a, const mpz_class& e) const {
    mpz_class r;
    mpz_class ord(p_ - 1);
    mpz_fdiv_r(r.get_mpz_t(), e.get_mpz_t(), ord.get_mpz_t());
    return pow(a, r.get_si());
  }

  /// Discrete log of x base the fixed generator, in [0, p-2].
  /// Baby-step giant-step against a table built once per field.
  int64_t dlog(Unit x) const {
    int64_t m = baby_count_;
    int64_t cur = x.value;
    for (int64_t giant = 0; giant < m + 2; ++giant) {
      auto it = baby_.find(cur);
      if (it != baby_.end()) {
        int64_t e = giant * m + it->second;
        return e % (p_ - 1);
      }
      cur = cur * giant_step_ % p_;
    }
    throw std::logic_error("dlog: generator table exhausted");
  }

  core::FgAbGroup unit_group() const { return core::FgAbGroup::cyclic(mpz_class(p_ - 1)); }

  Unit random_unit(Rng& rng) const { return Unit{rng.uniform(1, p_ - 1)}; }

  /// Smallest primitive root mod p (p prime).
  static int64_t find_generator(int64_t p) {
    if (!is_prime(p)) throw std::invalid_argument("p is not prime");
    int64_t n = p - 1;
    std::vector<int64_t> prime_factors;
    int64_t m = n;
    for (int64_t d = 2; d * d <= m; ++d)
      if (m % d == 0) {
        prime_factors.push_back(d);
        while (m % d == 0) m /= d;
      }
    if (m > 1) prime_factors.push_back(m);
    for (int64_t g = 2; g < p; ++g) {
      bool primitive = true;
      for (int64_t q : prime_factors) {
        if (pow_raw(g, n / q, p) == 1) {
          primitive = false;
          break;
        }
      }
      if (primitive) return g;
    }
    throw std::logic_error("no primitive root found");
  }

  /// Square root mod p by Tonelli-Shanks; nullopt for non-residues.
  std::optional<int64_t> sqrt(int64_t a) const {
    a = reduce(a);
    if (a == 0) return 0;
    if (pow_raw(a, (p_ - 1) / 2, p_) != 1) return std::nullopt;
    if (p_ % 4 == 3) return pow_raw(a, (p_ + 1) / 4, p_);
    // write p-1 = q * 2^s with q odd
    int64_t q = p_ - 1, s = 0;
    while (q % 2 == 0) {
      q /= 2;
      ++s;
    }
    int64_t z = 2;
    while (pow_raw(z, (p_ - 1) / 2, p_) == 1) ++z;
    int64_t c = pow_raw(z, q, p_);
    int64_t x = pow_raw(a, (q + 1) / 2, p_);
    int64_t t = pow_raw(a, q, p_);
    int64_t m2 = s;
    while (t != 1) {
      int64_t i = 0, tt = t;
      while (tt != 1) {
        tt = tt * tt % p_;
        ++i;
      }
      int64_t b = c;
      for (int64_t j = 0; j < m2 - i - 1; ++j) b = b * b % p_;
      x = x * b % p_;
      c = b * b % p_;
      t = t * c % p_;
      m2 = i;
    }
    return x;
  }

 private:
  static int64_t pow_raw(int64_t base, int64_t e, int64_t mod) {
    int64_t acc = 1;
    base %= mod;
    while (e > 0) {
      if (e & 1) acc = acc * base % mod;
      base = base * base % mod;
      e >>= 1;
    }
    return acc;
  }

  void build_dlog_table() {
    int64_t n = p_ - 1;
    baby_count_ = 1;
    while (baby_count_ * baby_count_ < n) ++baby_count_;
    int64_t cur = 1;
    baby_.reserve(static_cast<std::size_t>(baby_count_));
    for (int64_t j = 0; j < baby_count_; ++j) {
      baby_.emplace(cur, j);
      cur = cur * generator_ % p_;
    }
    // generator^{-m}
    giant_step_ = pow_raw(pow_raw(generator_, baby_count_, p_), p_ - 2, p_);
  }

  int64_t p_;
  int64_t generator_;
  int64_t baby_count_ = 0;
  int64_t giant_step_ = 1;
  std::unordered_map<int64_t, int64_t> baby_;
};

}  // namespace picmot::field
