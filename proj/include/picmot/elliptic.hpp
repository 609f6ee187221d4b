#pragma once

#include "picmot/fg_group.hpp"
#include "picmot/prime_field.hpp"
#include "picmot/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace picmot::ell {

using field::PrimeField;
using field::Unit;
using std::int64_t;

struct Point {
  bool infinity = true;
  int64_t x = 0, y = 0;

  static Point inf() { return Point{}; }
  static Point affine(int64_t x, int64_t y) { return Point{false, x, y}; }

  bool operator==(const Point& o) const {
    if (infinity || o.infinity) return infinity == o.infinity;
    return x == o.x && y == o.y;
  }
  bool operator!=(const Point& o) const { return !(*this == o); }
  bool operator<(const Point& o) const {
    if (infinity != o.infinity) return infinity && !o.infinity;
    if (x != o.x) return x < o.x;
    return y < o.y;
  }
};

/// Short Weierstrass curve y^2 = x^3 + a x + b over F_p.
class Curve {
 public:
  Curve(PrimeField field, int64_t a, int64_t b)
      : field_(std::move(field)), a_(field_.reduce(a)), b_(field_.reduce(b)) {
    int64_t p = field_.p();
    int64_t disc = (4 * pow3(a_, p) % p + 27 * b_ % p * b_ % p) % p;
    if (disc == 0) throw std::invalid_argument("curve is singular");
  }

  const PrimeField& field() const { return field_; }
  int64_t p() const { return field_.p(); }
  int64_t a() const { return a_; }
  int64_t b() const { return b_; }

  bool operator==(const Curve& o) const {
    return field_.p() == o.field_.p() && a_ == o.a_ && b_ == o.b_;
  }

  bool on_curve(const Point& pt) const {
    if (pt.infinity) return true;
    int64_t p = field_.p();
    int64_t lhs = pt.y * pt.y % p;
    int64_t rhs = (pt.x * pt.x % p * pt.x % p + a_ * pt.x % p + b_) % p;
    return lhs == rhs;
  }

  Point check(const Point& pt) const {
    if (!on_curve(pt)) throw std::invalid_argument("point not on curve");
    return pt;
  }

  Point neg(const Point& pt) const {
    if (pt.infinity) return pt;
    return Point::affine(pt.x, field_.reduce(-pt.y));
  }

  Point add(const Point& P, const Point& Q) const {
    if (P.infinity) return Q;
    if (Q.infinity) return P;
    int64_t p = field_.p();
    if (P.x == Q.x && (P.y + Q.y) % p == 0) return Point::inf();
    int64_t lam;
    if (P == Q) {
      int64_t num = (3 * (P.x * P.x % p) % p + a_) % p;
      lam = num * inv(2 * P.y % p) % p;
    } else {
      lam = field_.reduce(Q.y - P.y) * inv(field_.reduce(Q.x - P.x)) % p;
    }
    int64_t xr = field_.reduce(lam * lam % p - P.x - Q.x);
    int64_t yr = field_.reduce(lam * field_.reduce(P.x - xr) % p - P.y);
    return Point::affine(xr, yr);
  }

  Point sub(const Point& P, const Point& Q) const { return add(P, neg(Q)); }

  Point mul(const Point& P, int64_t n) const {
    Point base = n < 0 ? neg(P) : P;
    std::uint64_t k = n < 0 ? static_cast<std::uint64_t>(-(n + 1)) + 1 : static_cast<std::uint64_t>(n);
    Point acc = Point::inf();
    while (k > 0) {
      if (k & 1) acc = add(acc, base);
      base = add(base, base);
      k >>= 1;
    }
    return acc;
  }

  std::optional<Point> lift_x(int64_t x) const {
    x = field_.reduce(x);
    int64_t p = field_.p();
    int64_t rhs = (x * x % p * x % p + a_ * x % p + b_) % p;
    auto y = field_.sqrt(rhs);
    if (!y) return std::nullopt;
    return Point::affine(x, *y);
  }

  Point random_point(Rng& rng) const {
    for (int tries = 0; tries < 4096; ++tries) {
      auto pt = lift_x(rng.uniform(0, field_.p() - 1));
      if (!pt) continue;
      return rng.coin() ? neg(*pt) : *pt;
    }
    throw std::logic_error("random_point: no liftable x found");
  }

 private:
  int64_t inv(int64_t v) const { return field_.inv(field_.unit(v)).value; }
  static int64_t pow3(int64_t a, int64_t p) { return a * a % p * a % p; }

  PrimeField field_;
  int64_t a_, b_;
};

/// Formal Z-linear combination of rational points. Entries merge and drop
/// automatically; support is restricted to F_p-rational points by
/// construction.
class Divisor {
 public:
  Divisor() = default;

  void add(const Point& pt, int64_t mult) {
    if (mult == 0) return;
    auto it = coeffs_.find(pt);
    if (it == coeffs_.end()) {
      coeffs_.emplace(pt, mult);
    } else {
      it->second += mult;
      if (it->second == 0) coeffs_.erase(it);
    }
  }

  static Divisor single(const Point& pt, int64_t mult) {
    Divisor d;
    d.add(pt, mult);
    return d;
  }

  const std::map<Point, int64_t>& coeffs() const { return coeffs_; }
  bool empty() const { return coeffs_.empty(); }

  int64_t degree() const {
    int64_t d = 0;
    for (const auto& [pt, m] : coeffs_) d += m;
    return d;
  }

  int64_t multiplicity(const Point& pt) const {
    auto it = coeffs_.find(pt);
    return it == coeffs_.end() ? 0 : it->second;
  }

  Divisor operator+(const Divisor& o) const {
    Divisor r = *this;
    for (const auto& [pt, m] : o.coeffs_) r.add(pt, m);
    return r;
  }
  Divisor operator-(const Divisor& o) const {
    Divisor r = *this;
    for (const auto& [pt, m] : o.coeffs_) r.add(pt, -m);
    return r;
  }
  Divisor operator-() const {
    Divisor r;
    for (const auto& [pt, m] : coeffs_) r.add(pt, -m);
    return r;
  }
  bool operator==(const Divisor& o) const { return coeffs_ == o.coeffs_; }

  bool supports(const Point& pt) const { return coeffs_.count(pt) != 0; }

 private:
  std::map<Point, int64_t> coeffs_;
};

/// mu_a^* D, the pullback of D along translation by a: [Q] -> [Q - a].
inline Divisor pullback_translate(const Curve& E, const Divisor& d, const Point& a) {
  Divisor r;
  for (const auto& [pt, m] : d.coeffs()) r.add(E.sub(pt, a), m);
  return r;
}

/// Divisor class in Abel-Jacobi normal form: (sum of points, degree).
/// The identity class is (O, 0).
struct PicClass {
  Point point = Point::inf();
  int64_t degree = 0;

  bool operator==(const PicClass& o) const { return point == o.point && degree == o.degree; }
  bool operator!=(const PicClass& o) const { return !(*this == o); }
  bool is_trivial() const { return point.infinity && degree == 0; }
};

inline PicClass divisor_class(const Curve& E, const Divisor& d) {
  Point s = Point::inf();
  for (const auto& [pt, m] : d.coeffs()) s = E.add(s, E.mul(pt, m));
  return PicClass{s, d.degree()};
}

inline PicClass pic_add(const Curve& E, const PicClass& a, const PicClass& b) {
  return PicClass{E.add(a.point, b.point), a.degree + b.degree};
}

inline PicClass pic_neg(const Curve& E, const PicClass& a) {
  return PicClass{E.neg(a.point), -a.degree};
}

inline PicClass pic_mul(const Curve& E, const PicClass& a, int64_t n) {
  return PicClass{E.mul(a.point, n), n * a.degree};
}

/// Canonical divisor representative [P] + (d-1)[O] of the class (P, d).
inline Divisor canonical_divisor(const PicClass& c) {
  Divisor d;
  d.add(c.point, 1);
  d.add(Point::inf(), c.degree - 1);
  return d;
}

// ---------------------------------------------------------------------------
// Functions with prescribed principal divisor, as straight-line programs of
// chord/tangent lines. A non-vertical line is stored monic in y and a
// vertical one monic in x, so every assembled function has leading
// coefficient 1 in the uniformizer x/y at the origin: normalization at O is
// built in.
// ---------------------------------------------------------------------------

struct LineFactor {
  bool vertical = false;
  int64_t lambda = 0;  // slope, unused for verticals
  int64_t c = 0;       // y - lambda x - c = 0, or x - c = 0
  int64_t exponent = 1;
};

struct FuncSlp {
  std::vector<LineFactor> factors;
  Divisor divisor;  // what the function's divisor is, for collision checks

  bool constant_one() const { return factors.empty(); }
};

namespace detail {

struct StepResult {
  Point sum;
  std::vector<LineFactor> factors;
};

/// Factors of the normalized function with divisor [A]+[B]-[A+B]-[O].
inline StepResult addition_step(const Curve& E, const Point& A, const Point& B) {
  if (A.infinity) return {B, {}};
  if (B.infinity) return {A, {}};
  int64_t p = E.p();
  if (A.x == B.x && (A.y + B.y) % p == 0) {
    // vertical: [A] + [-A] - 2[O]
    return {Point::inf(), {LineFactor{true, 0, A.x, 1}}};
  }
  int64_t lam;
  const auto& F = E.field();
  if (A == B) {
    int64_t num = (3 * (A.x * A.x % p) % p + E.a()) % p;
    lam = num * F.inv(F.unit(2 * A.y % p)).value % p;
  } else {
    lam = F.reduce(B.y - A.y) * F.inv(F.unit(F.reduce(B.x - A.x))).value % p;
  }
  int64_t c = F.reduce(A.y - lam * A.x % p);
  Point S = E.add(A, B);
  std::vector<LineFactor> fs;
  fs.push_back(LineFactor{false, lam, c, 1});
  if (!S.infinity) fs.push_back(LineFactor{true, 0, S.x, -1});
  return {S, fs};
}

inline void expand_points(const Divisor& d, int sign, std::vector<Point>& out) {
  for (const auto& [pt, m] : d.coeffs()) {
    if ((m > 0) != (sign > 0)) continue;
    int64_t copies = m > 0 ? m : -m;
    for (int64_t i = 0; i < copies; ++i) out.push_back(pt);
  }
}

/// Double-and-add chain for the normalized function with divisor
/// n[P] - [nP] - (n-1)[O], n >= 1. Keeps the factor count at O(log n) so the
/// spurious zero set stays small.
inline std::vector<LineFactor> miller_chain(const Curve& E, const Point& P, int64_t n) {
  std::vector<LineFactor> fs;
  if (n <= 1 || P.infinity) return fs;
  int hi = 63;
  while (!((n >> hi) & 1)) --hi;
  Point A = P;
  for (int bit = hi - 1; bit >= 0; --bit) {
    for (auto& lf : fs) lf.exponent *= 2;
    auto dbl = addition_step(E, A, A);
    fs.insert(fs.end(), dbl.factors.begin(), dbl.factors.end());
    A = dbl.sum;
    if ((n >> bit) & 1) {
      auto stp = addition_step(E, A, P);
      fs.insert(fs.end(), stp.factors.begin(), stp.factors.end());
      A = stp.sum;
    }
  }
  return fs;
}

}  // namespace detail

/// Normalized function (monic at O in the uniformizer x/y) with the given
/// principal divisor. The accumulation order over the support is canonical;
/// reverse = true walks it the other way, giving an independent addition
/// chain for cross-checks.
inline FuncSlp normalized_function(const Curve& E, const Divisor& d, bool reverse = false) {
  if (d.degree() != 0 || !divisor_class(E, d).is_trivial())
    throw std::invalid_argument("divisor not principal");
  FuncSlp f;
  f.divisor = d;

  // High multiplicities are peeled off with double-and-add chains first,
  // leaving a residual divisor of small multiplicities for the pairwise
  // accumulation below.
  Divisor residual = d;
  for (const auto& [pt, m] : d.coeffs()) {
    if (pt.infinity) continue;
    int64_t absm = m > 0 ? m : -m;
    if (absm <= 2) continue;
    int sign = m > 0 ? 1 : -1;
    auto chain = detail::miller_chain(E, pt, absm);
    for (auto lf : chain) {
      lf.exponent *= sign;
      f.factors.push_back(lf);
    }
    residual.add(pt, -m);
    residual.add(E.mul(pt, absm), sign);
    residual.add(Point::inf(), sign * (absm - 1));
  }

  for (int sign : {+1, -1}) {
    std::vector<Point> pts;
    detail::expand_points(residual, sign, pts);
    if (reverse) std::reverse(pts.begin(), pts.end());
    if (pts.empty()) continue;
    Point acc = pts[0];
    for (std::size_t i = 1; i < pts.size(); ++i) {
      auto step = detail::addition_step(E, acc, pts[i]);
      for (auto lf : step.factors) {
        lf.exponent *= sign;
        f.factors.push_back(lf);
      }
      acc = step.sum;
    }
  }
  return f;
}

/// Value at an affine point; nullopt when a line factor vanishes there or
/// the point is at infinity (the caller re-randomizes).
inline std::optional<Unit> eval_slp(const Curve& E, const FuncSlp& f, const Point& z) {
  if (z.infinity) {
    if (f.constant_one()) return E.field().one();
    return std::nullopt;
  }
  int64_t p = E.p();
  const auto& F = E.field();
  Unit acc = F.one();
  for (const auto& lf : f.factors) {
    int64_t v = lf.vertical ? F.reduce(z.x - lf.c)
                            : F.reduce(z.y - lf.lambda * z.x % p - lf.c);
    if (v == 0) return std::nullopt;
    acc = F.mul(acc, F.pow(Unit{v}, lf.exponent));
  }
  return acc;
}

/// Exact evaluation of the normalized function f_d on the divisor e,
/// i.e. the product of f_d(P)^{n_P}. Supports must be disjoint and e must
/// avoid the origin.
inline Unit miller_eval(const Curve& E, const Divisor& d, const Divisor& e,
                        bool reverse_chain = false) {
  FuncSlp f = normalized_function(E, d, reverse_chain);
  for (const auto& [pt, m] : e.coeffs()) {
    if (d.supports(pt)) throw std::runtime_error("support collision");
    if (pt.infinity && !f.constant_one()) throw std::runtime_error("support collision");
  }
  Unit acc = E.field().one();
  for (const auto& [pt, m] : e.coeffs()) {
    auto v = eval_slp(E, f, pt);
    if (!v) throw std::runtime_error("support collision");
    acc = E.field().mul(acc, E.field().pow(*v, m));
  }
  return acc;
}

/// Evaluates a rational expression known to be a constant function at a
/// random regular point, and certifies constancy with a second point.
inline Unit eval_constant(const Curve& E,
                          const std::function<std::optional<Unit>(const Point&)>& expr,
                          Rng& rng, int retries = 32) {
  std::optional<Unit> first;
  for (int t = 0; t < retries; ++t) {
    Point z = E.random_point(rng);
    auto v = expr(z);
    if (!v) continue;
    if (!first) {
      first = v;
      continue;
    }
    if (first->value != v->value)
      throw std::logic_error("constant expression evaluated to two different values");
    return *first;
  }
  throw std::runtime_error("evaluation points exhausted (support collisions)");
}

// ---------------------------------------------------------------------------
// The classical map defined by a line bundle: a |-> class of mu_a^* D - D.
// ---------------------------------------------------------------------------

inline PicClass phi_L(const Curve& E, const PicClass& l, const Point& a) {
  Divisor d = canonical_divisor(l);
  Divisor pulled = pullback_translate(E, d, a);
  return divisor_class(E, pulled - d);
}

// ---------------------------------------------------------------------------
// The extension of E by G_m attached to a degree-0 class q, presented by an
// explicit 2-cocycle on rational points.
// ---------------------------------------------------------------------------

struct ExtPoint {
  Point base;
  Unit fiber;

  bool operator==(const ExtPoint& o) const { return base == o.base && fiber == o.fiber; }
};

/// Normalized function g_R with divisor mu_R^* D_q - D_q, where D_q is the
/// canonical representative [Q] - [O] of q.
inline FuncSlp translate_comparison(const Curve& E, const PicClass& q, const Point& R) {
  if (q.degree != 0) throw std::invalid_argument("class must have degree 0");
  Divisor dq = canonical_divisor(q);
  return normalized_function(E, pullback_translate(E, dq, R) - dq);
}

/// gamma_q(P, Q) = g_{P+Q} * (mu_Q^* g_P)^{-1} * g_Q^{-1}, a constant.
inline Unit ext_cocycle(const Curve& E, const PicClass& q, const Point& P, const Point& Q,
                        Rng& rng) {
  if (P.infinity || Q.infinity) return E.field().one();
  FuncSlp gPQ = translate_comparison(E, q, E.add(P, Q));
  FuncSlp gP = translate_comparison(E, q, P);
  FuncSlp gQ = translate_comparison(E, q, Q);
  const auto& F = E.field();
  auto expr = [&](const Point& z) -> std::optional<Unit> {
    auto a = eval_slp(E, gPQ, z);
    auto b = eval_slp(E, gP, E.add(z, Q));
    auto c = eval_slp(E, gQ, z);
    if (!a || !b || !c) return std::nullopt;
    return F.div(*a, F.mul(*b, *c));
  };
  return eval_constant(E, expr, rng);
}

inline ExtPoint ext_identity(const Curve& E) { return ExtPoint{Point::inf(), E.field().one()}; }

inline ExtPoint ext_mul(const Curve& E, const PicClass& q, const ExtPoint& x, const ExtPoint& y,
                        Rng& rng) {
  Unit g = ext_cocycle(E, q, x.base, y.base, rng);
  return ExtPoint{E.add(x.base, y.base), E.field().mul(E.field().mul(x.fiber, y.fiber), g)};
}

inline ExtPoint ext_inv(const Curve& E, const PicClass& q, const ExtPoint& x, Rng& rng) {
  Unit g = ext_cocycle(E, q, x.base, E.neg(x.base), rng);
  const auto& F = E.field();
  return ExtPoint{E.neg(x.base), F.inv(F.mul(x.fiber, g))};
}

/// Character of the extension E_q restricting to t -> t^n on the fiber.
/// Exists exactly when n*q is the trivial class; otherwise the divisor
/// n*D_q is certified non-principal by its Abel-Jacobi class.
struct ExtCharacter {
  bool exists = false;
  int64_t n = 0;
  PicClass obstruction;  // class of n * D_q when it does not vanish

  Curve curve;
  PicClass q;
  FuncSlp f_n;  // normalized function with divisor n*D_q, when it exists

  Unit eval(const ExtPoint& x, Rng& rng) const {
    if (!exists) throw std::logic_error("character does not exist");
    const auto& F = curve.field();
    Unit un = F.pow(x.fiber, n);
    if (x.base.infinity || n == 0) return un;
    FuncSlp gR = translate_comparison(curve, q, x.base);
    auto expr = [&](const Point& z) -> std::optional<Unit> {
      auto a = eval_slp(curve, f_n, curve.add(z, x.base));
      auto b = eval_slp(curve, f_n, z);
      auto c = eval_slp(curve, gR, z);
      if (!a || !b || !c) return std::nullopt;
      return F.div(*a, F.mul(*b, F.pow(*c, n)));
    };
    Unit psi = eval_constant(curve, expr, rng);
    return F.mul(un, psi);
  }
};

inline ExtCharacter ext_character(const Curve& E, const PicClass& q, int64_t n) {
  ExtCharacter chi{false, n, PicClass{}, E, q, FuncSlp{}};
  Divisor dn = canonical_divisor(q);
  Divisor scaled;
  for (const auto& [pt, m] : dn.coeffs()) scaled.add(pt, m * n);
  PicClass cls = divisor_class(E, scaled);
  if (!cls.is_trivial()) {
    chi.obstruction = cls;
    return chi;
  }
  chi.exists = true;
  chi.f_n = normalized_function(E, scaled);
  return chi;
}

// ---------------------------------------------------------------------------
// Full rational point group.
// ---------------------------------------------------------------------------

struct PointGroupInfo {
  core::FgAbGroup group;
  std::vector<Point> generators;  // at most two, orders descending
  int64_t order = 1;
};

namespace detail {

struct PointHash {
  std::size_t operator()(const Point& p) const {
    if (p.infinity) return 0x9e3779b97f4a7c15ull;
    return std::hash<int64_t>()(p.x * 1000003 + p.y);
  }
};

inline std::vector<int64_t> prime_factors(int64_t n) {
  std::vector<int64_t> f;
  for (int64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) {
      f.push_back(d);
      while (n % d == 0) n /= d;
    }
  if (n > 1) f.push_back(n);
  return f;
}

inline int64_t point_order(const Curve& E, const Point& P, int64_t group_order,
                           const std::vector<int64_t>& primes) {
  int64_t o = group_order;
  for (int64_t q : primes) {
    while (o % q == 0 && E.mul(P, o / q).infinity) o /= q;
  }
  return o;
}

}  // namespace detail

inline std::vector<Point> enumerate_points(const Curve& E) {
  std::vector<Point> pts;
  pts.push_back(Point::inf());
  int64_t p = E.p();
  for (int64_t x = 0; x < p; ++x) {
    int64_t rhs = (x * x % p * x % p + E.a() * x % p + E.b()) % p;
    if (rhs == 0) {
      pts.push_back(Point::affine(x, 0));
      continue;
    }
    auto y = E.field().sqrt(rhs);
    if (!y) continue;
    pts.push_back(Point::affine(x, *y));
    pts.push_back(Point::affine(x, E.field().reduce(-*y)));
  }
  return pts;
}

/// Structure Z/n x Z/m (n | m) of E(F_p), with explicit generators,
/// computed by full enumeration and element orders.
inline PointGroupInfo point_group(const Curve& E) {
  std::vector<Point> pts = enumerate_points(E);
  int64_t N = static_cast<int64_t>(pts.size());
  auto primes = detail::prime_factors(N);

  int64_t exponent = 1;
  Point gen1 = Point::inf();
  for (const auto& P : pts) {
    int64_t o = detail::point_order(E, P, N, primes);
    if (o > exponent) {
      exponent = o;
      gen1 = P;
    }
    // lcm accumulation is unnecessary: E(F_p) has rank <= 2, so the maximal
    // element order is the exponent.
    if (exponent == N) break;
  }

  PointGroupInfo info;
  info.order = N;
  int64_t cofactor = N / exponent;
  if (exponent % cofactor != 0)
    throw std::logic_error("point group is not of the expected rank-2 shape");

  if (N == 1) {
    info.group = core::FgAbGroup::trivial();
    return info;
  }
  if (cofactor == 1) {
    info.group = core::FgAbGroup::cyclic(mpz_class(exponent));
    info.generators = {gen1};
    return info;
  }

  std::unordered_set<Point, detail::PointHash> cyc;
  {
    Point cur = Point::inf();
    for (int64_t i = 0; i < exponent; ++i) {
      cyc.insert(cur);
      cur = E.add(cur, gen1);
    }
  }
  std::vector<int64_t> divs;
  for (int64_t d = 1; d * d <= cofactor; ++d)
    if (cofactor % d == 0) {
      divs.push_back(d);
      if (d != cofactor / d) divs.push_back(cofactor / d);
    }
  std::sort(divs.begin(), divs.end());
  Point gen2 = Point::inf();
  for (const auto& Q : pts) {
    int64_t img_order = 0;
    for (int64_t d : divs)
      if (cyc.count(E.mul(Q, d))) {
        img_order = d;
        break;
      }
    if (img_order == cofactor) {
      gen2 = Q;
      break;
    }
  }
  if (gen2.infinity) throw std::logic_error("no complementary generator found");
  info.group = core::FgAbGroup{0, {mpz_class(cofactor), mpz_class(exponent)}};
  info.generators = {gen1, gen2};
  return info;
}

}  // namespace picmot::ell
