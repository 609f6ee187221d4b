#pragma once

#include "picmot/elliptic.hpp"
#include "picmot/fg_group.hpp"
#include "picmot/prime_field.hpp"
#include "picmot/torus_char.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace picmot::motive {

using ell::Curve;
using ell::PicClass;
using ell::Point;
using field::PrimeField;
using field::Unit;
using std::int64_t;

/// 1-motive [Z^r -> G_m^s]: the matrix U of units has u(e_j) as column j.
struct KummerMotive {
  PrimeField field;
  int64_t r = 0, s = 0;
  std::vector<std::vector<Unit>> U;  // s rows, r columns

  const Unit& entry(int64_t m, int64_t j) const { return U[m][j]; }

  std::vector<Unit> u_basis(int64_t j) const {
    std::vector<Unit> col(s);
    for (int64_t m = 0; m < s; ++m) col[m] = U[m][j];
    return col;
  }

  /// u(x) for x in Z^r.
  std::vector<Unit> u_of(const std::vector<int64_t>& x) const {
    std::vector<Unit> g(s, field.one());
    for (int64_t m = 0; m < s; ++m)
      for (int64_t j = 0; j < r; ++j) g[m] = field.mul(g[m], field.pow(U[m][j], x[j]));
    return g;
  }

  /// Entrywise discrete logs of U, an s x r integer matrix.
  core::IntMatrix dlog_matrix() const {
    core::IntMatrix d(s, r);
    for (int64_t m = 0; m < s; ++m)
      for (int64_t j = 0; j < r; ++j) d(m, j) = field.dlog(U[m][j]);
    return d;
  }

  torus::Torus torus() const { return torus::Torus{s, field}; }
};

inline KummerMotive make_kummer(const PrimeField& F, int64_t r, int64_t s,
                                const std::vector<std::vector<int64_t>>& units) {
  KummerMotive m{F, r, s, {}};
  if (static_cast<int64_t>(units.size()) != s) throw std::invalid_argument("U row count != s");
  m.U.resize(s);
  for (int64_t i = 0; i < s; ++i) {
    if (static_cast<int64_t>(units[i].size()) != r) throw std::invalid_argument("U col count != r");
    m.U[i].resize(r);
    for (int64_t j = 0; j < r; ++j) m.U[i][j] = F.unit(units[i][j]);
  }
  return m;
}

/// Cartier dual of a Kummer motive: ranks swap and the unit matrix
/// transposes (pushing [X -> T] along a character of T evaluates that
/// character on the columns of U).
inline KummerMotive cartier_dual_kummer(const KummerMotive& m) {
  KummerMotive d{m.field, m.s, m.r, {}};
  d.U.assign(m.r, std::vector<Unit>(m.s, m.field.one()));
  for (int64_t i = 0; i < m.s; ++i)
    for (int64_t j = 0; j < m.r; ++j) d.U[j][i] = m.U[i][j];
  return d;
}

/// 1-motive [Z^r -> E] without toric part.
struct AbelianMotive {
  Curve curve;
  int64_t r = 0;
  std::vector<Point> u;  // u(e_1), ..., u(e_r)
};

inline AbelianMotive make_abelian(const Curve& E, std::vector<Point> pts) {
  for (const auto& p : pts)
    if (!E.on_curve(p)) throw std::invalid_argument("motive point not on curve");
  return AbelianMotive{E, static_cast<int64_t>(pts.size()), std::move(pts)};
}

// ---------------------------------------------------------------------------
// The dual group scheme of an abelian motive: an extension of A* = E by the
// torus (k*)^r, realized on coordinates (base point, fiber units) with the
// product corrected by Miller data so that extension classes add.
// ---------------------------------------------------------------------------

struct GPrimeElement {
  Point base;
  std::vector<Unit> fibers;

  bool operator==(const GPrimeElement& o) const { return base == o.base && fibers == o.fibers; }
  bool operator!=(const GPrimeElement& o) const { return !(*this == o); }
};

/// Comparison constant for summing the extensions attached to the degree-0
/// classes ([A1]-[O]) and ([A2]-[O]) into the one attached to
/// ([A1+A2]-[O]), read off at the point R.
inline Unit baer_correction(const Curve& E, const Point& A1, const Point& A2, const Point& R,
                            Rng& rng) {
  if (R.infinity || A1.infinity || A2.infinity) return E.field().one();
  Point A12 = E.add(A1, A2);
  ell::Divisor hd;
  hd.add(A1, 1);
  hd.add(A2, 1);
  hd.add(A12, -1);
  hd.add(Point::inf(), -1);
  ell::FuncSlp h = ell::normalized_function(E, hd);
  ell::FuncSlp g1 = ell::translate_comparison(E, PicClass{A1, 0}, R);
  ell::FuncSlp g2 = ell::translate_comparison(E, PicClass{A2, 0}, R);
  ell::FuncSlp g3 = ell::translate_comparison(E, PicClass{A12, 0}, R);
  const auto& F = E.field();
  auto expr = [&](const Point& z) -> std::optional<Unit> {
    auto hz = ell::eval_slp(E, h, z);
    auto hzr = ell::eval_slp(E, h, E.add(z, R));
    auto v1 = ell::eval_slp(E, g1, z);
    auto v2 = ell::eval_slp(E, g2, z);
    auto v3 = ell::eval_slp(E, g3, z);
    if (!hz || !hzr || !v1 || !v2 || !v3) return std::nullopt;
    return F.div(F.mul(F.div(*hzr, *hz), *v3), F.mul(*v1, *v2));
  };
  return ell::eval_constant(E, expr, rng);
}

class GPrime {
 public:
  GPrime(AbelianMotive m) : m_(std::move(m)) {
    basis_classes_.reserve(m_.r);
    for (const auto& pt : m_.u) basis_classes_.push_back(PicClass{pt, 0});
  }

  const AbelianMotive& base_motive() const { return m_; }
  const Curve& curve() const { return m_.curve; }
  int64_t rank() const { return m_.r; }
  const std::vector<PicClass>& basis_classes() const { return basis_classes_; }

  GPrimeElement identity() const {
    return {Point::inf(), std::vector<Unit>(m_.r, m_.curve.field().one())};
  }

  GPrimeElement include_fiber(const std::vector<Unit>& t) const {
    if (static_cast<int64_t>(t.size()) != m_.r) throw std::invalid_argument("fiber rank mismatch");
    return {Point::inf(), t};
  }

  Point project(const GPrimeElement& g) const { return g.base; }

  GPrimeElement mul(const GPrimeElement& a, const GPrimeElement& b, Rng& rng) const {
    const auto& F = m_.curve.field();
    GPrimeElement out{m_.curve.add(a.base, b.base), std::vector<Unit>(m_.r, F.one())};
    for (int64_t i = 0; i < m_.r; ++i) {
      Unit k = baer_correction(m_.curve, a.base, b.base, m_.u[i], rng);
      out.fibers[i] = F.mul(F.mul(a.fibers[i], b.fibers[i]), k);
    }
    return out;
  }

  GPrimeElement inv(const GPrimeElement& a, Rng& rng) const {
    const auto& F = m_.curve.field();
    GPrimeElement out{m_.curve.neg(a.base), std::vector<Unit>(m_.r, F.one())};
    for (int64_t i = 0; i < m_.r; ++i) {
      Unit k = baer_correction(m_.curve, a.base, out.base, m_.u[i], rng);
      out.fibers[i] = F.inv(F.mul(a.fibers[i], k));
    }
    return out;
  }

  GPrimeElement random_element(Rng& rng) const {
    GPrimeElement g{m_.curve.random_point(rng), {}};
    g.fibers.reserve(m_.r);
    for (int64_t i = 0; i < m_.r; ++i) g.fibers.push_back(m_.curve.field().random_unit(rng));
    return g;
  }

  /// Sampled group-law verification: identity, commutativity, associativity.
  void verify(Rng& rng, int samples = 5) const {
    for (int t = 0; t < samples; ++t) {
      GPrimeElement a = random_element(rng), b = random_element(rng), c = random_element(rng);
      if (mul(a, identity(), rng) != a) throw std::logic_error("dual group: identity law failed");
      if (mul(a, b, rng) != mul(b, a, rng))
        throw std::logic_error("dual group: commutativity failed");
      GPrimeElement ab_c = mul(mul(a, b, rng), c, rng);
      GPrimeElement a_bc = mul(a, mul(b, c, rng), rng);
      if (ab_c != a_bc) throw std::logic_error("dual group: associativity failed");
      GPrimeElement ia = inv(a, rng);
      if (mul(a, ia, rng) != identity()) throw std::logic_error("dual group: inverse law failed");
    }
  }

 private:
  AbelianMotive m_;
  std::vector<PicClass> basis_classes_;
};

inline GPrime cartier_dual_abelian(const AbelianMotive& m, Rng& rng, int verify_samples = 5) {
  GPrime g(m);
  g.verify(rng, verify_samples);
  return g;
}

// ---------------------------------------------------------------------------
// Linear morphisms M -> M*.
// ---------------------------------------------------------------------------

/// For Kummer motives the pair is (F : X -> T^D, H : T -> X^D), two integer
/// matrices. For abelian motives the lattice part is forced to zero and the
/// group part is a structured map into the dual group scheme.
struct LinearMorphism {
  core::IntMatrix lattice_part;                     // F, s x r (Kummer); 0 x r (abelian)
  std::optional<core::IntMatrix> torus_exponents;   // H, r x s (Kummer)
  std::function<GPrimeElement(const Point&, Rng&)> gprime_map;  // abelian only

  bool is_kummer() const { return torus_exponents.has_value(); }
};

inline LinearMorphism kummer_morphism(core::IntMatrix F, core::IntMatrix H) {
  LinearMorphism m;
  m.lattice_part = std::move(F);
  m.torus_exponents = std::move(H);
  return m;
}

inline LinearMorphism add_kummer_morphisms(const LinearMorphism& a, const LinearMorphism& b) {
  if (!a.is_kummer() || !b.is_kummer()) throw std::invalid_argument("not Kummer morphisms");
  return kummer_morphism(a.lattice_part + b.lattice_part,
                         *a.torus_exponents + *b.torus_exponents);
}

/// Contravariant dual of a morphism M -> M*: again a morphism M -> M* under
/// the identification M** = M, given by transposing both components.
inline LinearMorphism dual_morphism(const LinearMorphism& m) {
  if (!m.is_kummer()) throw std::invalid_argument("dual_morphism: Kummer only");
  return kummer_morphism(m.torus_exponents->transpose(), m.lattice_part.transpose());
}

struct MorphismCheck {
  bool ok = true;
  std::string witness;
};

/// Commuting-square test for (F, H) against the Kummer motive M, checked as
/// exact unit identities: prod_m U_{mi}^{F_{mj}} = prod_m U_{mj}^{H_{im}}.
inline MorphismCheck is_morphism_kummer(const KummerMotive& M, const LinearMorphism& mor) {
  if (!mor.is_kummer()) throw std::invalid_argument("shape mismatch: expected Kummer morphism");
  const auto& F = M.field;
  const core::IntMatrix& Fm = mor.lattice_part;
  const core::IntMatrix& Hm = *mor.torus_exponents;
  if (Fm.rows() != static_cast<std::size_t>(M.s) || Fm.cols() != static_cast<std::size_t>(M.r) ||
      Hm.rows() != static_cast<std::size_t>(M.r) || Hm.cols() != static_cast<std::size_t>(M.s))
    throw std::invalid_argument("shape mismatch");
  for (int64_t i = 0; i < M.r; ++i)
    for (int64_t j = 0; j < M.r; ++j) {
      Unit lhs = F.one(), rhs = F.one();
      for (int64_t m = 0; m < M.s; ++m) {
        lhs = F.mul(lhs, F.pow(M.U[m][i], Fm(m, j)));
        rhs = F.mul(rhs, F.pow(M.U[m][j], Hm(i, m)));
      }
      if (lhs.value != rhs.value) {
        return {false, "square fails at basis pair (" + std::to_string(i) + "," +
                           std::to_string(j) + ")"};
      }
    }
  return {};
}

/// Abelian case: the group part must be a homomorphism into G'(k) (sampled)
/// and must kill every u(e_j) (the commuting square with trivial toric
/// part).
inline MorphismCheck is_morphism_abelian(const AbelianMotive& M, const GPrime& dual,
                                         const LinearMorphism& mor, Rng& rng,
                                         int samples = 100) {
  if (!mor.gprime_map) throw std::invalid_argument("shape mismatch: expected abelian morphism");
  for (int64_t j = 0; j < M.r; ++j) {
    if (mor.gprime_map(M.u[j], rng) != dual.identity())
      return {false, "u(e_" + std::to_string(j) + ") not killed"};
  }
  for (int t = 0; t < samples; ++t) {
    Point g = M.curve.random_point(rng);
    Point h = M.curve.random_point(rng);
    GPrimeElement lhs = mor.gprime_map(M.curve.add(g, h), rng);
    GPrimeElement rhs = dual.mul(mor.gprime_map(g, rng), mor.gprime_map(h, rng), rng);
    if (lhs != rhs) return {false, "additivity fails at a sampled pair"};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Hom(M, M*) for Kummer motives: all (F, H) with d^T F = H d mod (p-1),
// solved as an integer congruence system.
// ---------------------------------------------------------------------------

struct HomMMstar {
  core::FgAbGroup group;            // abstract group of morphisms (free)
  core::IntMatrix basis;            // (sr+rs) x rank, flattened (F | H) columns
  std::vector<LinearMorphism> basis_morphisms;
  int64_t r = 0, s = 0;

  /// Flattens (F, H) column-major into the ambient coordinate vector.
  static std::vector<mpz_class> flatten(const core::IntMatrix& F, const core::IntMatrix& H) {
    std::vector<mpz_class> v;
    v.reserve(F.rows() * F.cols() + H.rows() * H.cols());
    for (std::size_t j = 0; j < F.cols(); ++j)
      for (std::size_t i = 0; i < F.rows(); ++i) v.push_back(F(i, j));
    for (std::size_t j = 0; j < H.cols(); ++j)
      for (std::size_t i = 0; i < H.rows(); ++i) v.push_back(H(i, j));
    return v;
  }

  bool contains(const LinearMorphism& m) const {
    return core::in_lattice(basis, flatten(m.lattice_part, *m.torus_exponents));
  }
};

inline HomMMstar hom_M_Mstar_kummer(const KummerMotive& M) {
  const int64_t r = M.r, s = M.s;
  const mpz_class n(M.field.p() - 1);
  core::IntMatrix d = M.dlog_matrix();

  // condition rows (i, j) over Z/(p-1): sum_m d_{mi} F_{mj} - d_{mj} H_{im} = 0
  const std::size_t vars = static_cast<std::size_t>(s * r + r * s);
  core::IntMatrix cond(static_cast<std::size_t>(r * r), vars);
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < r; ++j) {
      std::size_t row = static_cast<std::size_t>(i * r + j);
      for (int64_t m = 0; m < s; ++m) {
        cond(row, static_cast<std::size_t>(j * s + m)) += d(m, i);        // F_{mj}
        cond(row, static_cast<std::size_t>(s * r + m * r + i)) -= d(m, j);  // H_{im}
      }
    }
  core::FgAbGroup target{0, {}};
  target.torsion.assign(static_cast<std::size_t>(r * r), n);
  // canonical form needs each entry >= 2; p >= 5 so n >= 4
  core::GroupHom condition(core::FgAbGroup::free_of_rank(vars), target, cond);
  auto ker = core::kernel(condition);

  HomMMstar out;
  out.group = ker.group;
  out.basis = ker.morphism.matrix;
  out.r = r;
  out.s = s;
  for (std::size_t col = 0; col < out.basis.cols(); ++col) {
    core::IntMatrix F(static_cast<std::size_t>(s), static_cast<std::size_t>(r));
    core::IntMatrix H(static_cast<std::size_t>(r), static_cast<std::size_t>(s));
    for (int64_t j = 0; j < r; ++j)
      for (int64_t m = 0; m < s; ++m) F(m, j) = out.basis(static_cast<std::size_t>(j * s + m), col);
    for (int64_t m = 0; m < s; ++m)
      for (int64_t i = 0; i < r; ++i)
        H(i, m) = out.basis(static_cast<std::size_t>(s * r + m * r + i), col);
    out.basis_morphisms.push_back(kummer_morphism(std::move(F), std::move(H)));
  }
  return out;
}

}  // namespace picmot::motive
