#pragma once

#include "picmot/int_matrix.hpp"
#include "picmot/prime_field.hpp"
#include "picmot/rng.hpp"

#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

namespace picmot::torus {

using field::PrimeField;
using field::Unit;
using std::int64_t;

/// Split lattice Z^r.
struct Lattice {
  int64_t rank = 0;
};

/// Split torus G_m^s over F_p; points are s-tuples of units.
struct Torus {
  int64_t rank = 0;
  PrimeField field;

  std::vector<Unit> one() const { return std::vector<Unit>(rank, field.one()); }

  std::vector<Unit> random_point(Rng& rng) const {
    std::vector<Unit> t(rank);
    for (auto& u : t) u = field.random_unit(rng);
    return t;
  }

  std::vector<Unit> mul(const std::vector<Unit>& a, const std::vector<Unit>& b) const {
    std::vector<Unit> c(rank);
    for (int64_t i = 0; i < rank; ++i) c[i] = field.mul(a[i], b[i]);
    return c;
  }
};

/// chi(g) = prod g_i^{chi_i}.
inline Unit char_pairing(const PrimeField& F, const std::vector<int64_t>& chi,
                         const std::vector<Unit>& g) {
  if (chi.size() != g.size()) throw std::invalid_argument("char_pairing arity mismatch");
  Unit acc = F.one();
  for (std::size_t i = 0; i < chi.size(); ++i) acc = F.mul(acc, F.pow(g[i], chi[i]));
  return acc;
}

inline Unit char_pairing(const PrimeField& F, const std::vector<mpz_class>& chi,
                         const std::vector<Unit>& g) {
  if (chi.size() != g.size()) throw std::invalid_argument("char_pairing arity mismatch");
  Unit acc = F.one();
  for (std::size_t i = 0; i < chi.size(); ++i) acc = F.mul(acc, F.pow(g[i], chi[i]));
  return acc;
}

/// Centered representative of e mod (p-1), in (-(p-1)/2, (p-1)/2].
inline int64_t canonical_exponent_lift(const PrimeField& F, int64_t e) {
  int64_t n = F.p() - 1;
  int64_t r = e % n;
  if (r < 0) r += n;
  if (2 * r > n) r -= n;
  return r;
}

struct RosenlichtResult {
  bool ok = false;
  std::vector<int64_t> exponents;  // canonical lifts
  std::optional<std::vector<Unit>> witness;  // a tuple where multiplicativity fails
};

/// Splits a pointwise map T(k) -> k* with f(1) = 1 into its character, or
/// reports a witness tuple where the character law fails. The failure case
/// means the input is not a morphism of group schemes.
inline RosenlichtResult rosenlicht_decompose(
    const Torus& T, const std::function<Unit(const std::vector<Unit>&)>& f, Rng& rng,
    int samples = 200) {
  const PrimeField& F = T.field;
  if (f(T.one()).value != 1) throw std::invalid_argument("f(1) != 1");
  RosenlichtResult res;
  res.exponents.resize(T.rank);
  for (int64_t i = 0; i < T.rank; ++i) {
    auto t = T.one();
    t[i] = F.generator();
    res.exponents[i] = canonical_exponent_lift(F, F.dlog(f(t)));
  }
  auto predicted = [&](const std::vector<Unit>& t) { return char_pairing(F, res.exponents, t); };
  // standard-generator tuples: the generator placed in every subset of slots
  // is redundant beyond pairs for a multiplicative map, so check singles,
  // pairs, then random tuples
  for (int64_t i = 0; i < T.rank; ++i)
    for (int64_t j = i; j < T.rank; ++j) {
      auto t = T.one();
      t[i] = F.generator();
      t[j] = F.mul(t[j], F.generator());
      if (f(t).value != predicted(t).value) {
        res.witness = t;
        return res;
      }
    }
  for (int k = 0; k < samples; ++k) {
    auto t = T.random_point(rng);
    if (f(t).value != predicted(t).value) {
      res.witness = t;
      return res;
    }
  }
  res.ok = true;
  return res;
}

/// alpha with coboundary sigma_alpha(x, y) = prod B_ij^{x_i y_j} for a
/// symmetric unit matrix B: alpha(x) = prod_i B_ii^{x_i(x_i-1)/2} *
/// prod_{i<j} B_ij^{x_i x_j}.
struct SigmaWitness {
  PrimeField field;
  std::vector<std::vector<Unit>> B;  // r x r symmetric

  Unit alpha(const std::vector<int64_t>& x) const {
    const auto r = B.size();
    Unit acc = field.one();
    for (std::size_t i = 0; i < r; ++i) {
      acc = field.mul(acc, field.pow(B[i][i], x[i] * (x[i] - 1) / 2));
      for (std::size_t j = i + 1; j < r; ++j)
        acc = field.mul(acc, field.pow(B[i][j], x[i] * x[j]));
    }
    return acc;
  }

  Unit sigma_alpha(const std::vector<int64_t>& x, const std::vector<int64_t>& y) const {
    std::vector<int64_t> xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xy[i] = x[i] + y[i];
    return field.div(alpha(xy), field.mul(alpha(x), alpha(y)));
  }

  Unit bilinear(const std::vector<int64_t>& x, const std::vector<int64_t>& y) const {
    Unit acc = field.one();
    for (std::size_t i = 0; i < B.size(); ++i)
      for (std::size_t j = 0; j < B.size(); ++j)
        acc = field.mul(acc, field.pow(B[i][j], x[i] * y[j]));
    return acc;
  }
};

/// Constructs the witness and verifies sigma_alpha = B-form exhaustively on
/// the box |x_i|, |y_i| <= box.
inline SigmaWitness sigma_witness(const PrimeField& F, const std::vector<std::vector<Unit>>& B,
                                  int64_t box = 3) {
  const std::size_t r = B.size();
  for (const auto& row : B)
    if (row.size() != r) throw std::invalid_argument("B not square");
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j)
      if (B[i][j].value != B[j][i].value) throw std::invalid_argument("B not symmetric");
  SigmaWitness w{F, B};
  if (r == 0) return w;

  std::vector<int64_t> x(r, -box), y(r, -box);
  auto advance = [&](std::vector<int64_t>& v) {
    for (std::size_t i = 0; i < r; ++i) {
      if (v[i] < box) {
        ++v[i];
        return true;
      }
      v[i] = -box;
    }
    return false;
  };
  do {
    std::fill(y.begin(), y.end(), -box);
    do {
      if (w.sigma_alpha(x, y).value != w.bilinear(x, y).value)
        throw std::logic_error("sigma witness verification failed");
    } while (advance(y));
  } while (advance(x));
  return w;
}

/// Finite model of the extension of X/N by G_m twisted by a symmetric
/// bilinear form: elements (gamma, x) in k* x (Z/N)^r with group law
/// (g1, x).(g2, y) = (g1 g2 sigma(x,y), x+y).
struct FiniteExtension {
  PrimeField field;
  std::vector<std::vector<Unit>> B;
  int64_t N = 1;
  int64_t r = 0;

  struct Element {
    Unit gamma;
    std::vector<int64_t> x;  // coordinates mod N
    bool operator==(const Element& o) const { return gamma == o.gamma && x == o.x; }
  };

  std::vector<int64_t> reduce(std::vector<int64_t> x) const {
    for (auto& v : x) {
      v %= N;
      if (v < 0) v += N;
    }
    return x;
  }

  Unit sigma(const std::vector<int64_t>& x, const std::vector<int64_t>& y) const {
    Unit acc = field.one();
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < r; ++j) acc = field.mul(acc, field.pow(B[i][j], x[i] * y[j]));
    return acc;
  }

  Element identity() const { return {field.one(), std::vector<int64_t>(r, 0)}; }

  Element mul(const Element& a, const Element& b) const {
    std::vector<int64_t> x(r);
    for (int64_t i = 0; i < r; ++i) x[i] = a.x[i] + b.x[i];
    return {field.mul(field.mul(a.gamma, b.gamma), sigma(a.x, b.x)), reduce(x)};
  }

  Element include(Unit g) const { return {g, std::vector<int64_t>(r, 0)}; }
  std::vector<int64_t> project(const Element& e) const { return e.x; }

  /// Splitting witness: basis constants c with alpha(x) = prod c_i^{x_i} *
  /// quadratic part, N-periodic. nullopt certifies the extension is
  /// non-split (no such alpha exists, over any box).
  std::optional<std::vector<Unit>> splitting_witness() const {
    std::vector<Unit> c(r, field.one());
    int64_t ord = field.p() - 1;
    for (int64_t k = 0; k < r; ++k) {
      // need c_k^N = B_kk^{-N(N-1)/2}
      Unit rhs = field.inv(field.pow(B[k][k], N * (N - 1) / 2));
      int64_t target = field.dlog(rhs);
      if (target % std::gcd(N % ord, ord) != 0) return std::nullopt;
      // solve N * e = target (mod ord)
      int64_t nn = N % ord, e = -1;
      for (int64_t cand = 0; cand < ord; ++cand)
        if (cand * nn % ord == target) {
          e = cand;
          break;
        }
      if (e < 0) return std::nullopt;
      c[k] = field.pow(field.generator(), e);
    }
    return c;
  }

  Unit alpha_value(const std::vector<Unit>& c, const std::vector<int64_t>& x) const {
    SigmaWitness w{field, B};
    Unit acc = w.alpha(x);
    for (int64_t i = 0; i < r; ++i) acc = field.mul(acc, field.pow(c[i], x[i]));
    return acc;
  }
};

inline FiniteExtension ext_from_bilinear(const PrimeField& F,
                                         const std::vector<std::vector<Unit>>& B, int64_t N) {
  const std::size_t r = B.size();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      if (B[i][j].value != B[j][i].value) throw std::invalid_argument("B not symmetric");
      if (F.pow(B[i][j], N).value != 1)
        throw std::invalid_argument("B entries must be killed by the exponent bound");
    }
  return FiniteExtension{F, B, N, static_cast<int64_t>(r)};
}

/// Morphism T^n -> G_m in character form: a monomial per slot times a unit.
struct CharFunction {
  PrimeField field;
  int64_t torus_rank = 0;
  int64_t arity = 1;
  std::vector<std::vector<int64_t>> slot_exponents;  // arity x torus_rank
  Unit constant{1};

  Unit evaluate(const std::vector<std::vector<Unit>>& slots) const {
    if (static_cast<int64_t>(slots.size()) != arity)
      throw std::invalid_argument("CharFunction arity mismatch");
    Unit acc = constant;
    for (int64_t k = 0; k < arity; ++k)
      acc = field.mul(acc, char_pairing(field, slot_exponents[k], slots[k]));
    return acc;
  }

  static CharFunction constant_map(const PrimeField& F, int64_t s, int64_t arity, Unit value) {
    CharFunction f{F, s, arity, {}, value};
    f.slot_exponents.assign(arity, std::vector<int64_t>(s, 0));
    return f;
  }
};

}  // namespace picmot::torus
