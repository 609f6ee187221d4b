#pragma once

#include "picmot/int_matrix.hpp"
#include "picmot/snf.hpp"

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace picmot::core {

/// Finitely generated abelian group in canonical form: Z^free_rank plus
/// one cyclic factor per torsion entry, the entries forming an ascending
/// divisibility chain with every entry >= 2. Elements are coordinate
/// vectors over the generators, torsion generators first.
struct FgAbGroup {
  std::size_t free_rank = 0;
  std::vector<mpz_class> torsion;

  static FgAbGroup trivial() { return {}; }
  static FgAbGroup free_of_rank(std::size_t r) { return {r, {}}; }
  static FgAbGroup cyclic(const mpz_class& n) {
    if (n == 0) return free_of_rank(1);
    if (n == 1) return trivial();
    return {0, {n}};
  }

  std::size_t num_generators() const { return free_rank + torsion.size(); }
  bool is_trivial() const { return num_generators() == 0; }
  bool is_finite() const { return free_rank == 0; }

  std::optional<mpz_class> order() const {
    if (!is_finite()) return std::nullopt;
    mpz_class o(1);
    for (const auto& d : torsion) o *= d;
    return o;
  }

  bool operator==(const FgAbGroup& o) const {
    return free_rank == o.free_rank && torsion == o.torsion;
  }
  bool operator!=(const FgAbGroup& o) const { return !(*this == o); }

  std::vector<mpz_class> zero() const {
    return std::vector<mpz_class>(num_generators(), mpz_class(0));
  }

  std::vector<mpz_class> reduce(std::vector<mpz_class> coords) const {
    if (coords.size() != num_generators()) throw std::invalid_argument("coordinate length mismatch");
    for (std::size_t i = 0; i < torsion.size(); ++i) {
      mpz_class r;
      mpz_fdiv_r(r.get_mpz_t(), coords[i].get_mpz_t(), torsion[i].get_mpz_t());
      coords[i] = r;
    }
    return coords;
  }

  bool is_zero(const std::vector<mpz_class>& coords) const {
    auto r = reduce(coords);
    for (const auto& x : r)
      if (x != 0) return false;
    return true;
  }

  std::vector<mpz_class> add(const std::vector<mpz_class>& a,
                             const std::vector<mpz_class>& b) const {
    std::vector<mpz_class> c(num_generators());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
    return reduce(c);
  }

  /// Relations of the canonical presentation Z^k -> G: one column d_i e_i
  /// per torsion generator.
  IntMatrix relation_matrix() const {
    IntMatrix r(num_generators(), torsion.size());
    for (std::size_t i = 0; i < torsion.size(); ++i) r(i, i) = torsion[i];
    return r;
  }

  std::string str() const {
    std::ostringstream os;
    bool first = true;
    if (free_rank == 1) {
      os << "Z";
      first = false;
    } else if (free_rank > 1) {
      os << "Z^" << free_rank;
      first = false;
    }
    for (const auto& d : torsion) {
      os << (first ? "" : " x ") << "Z/" << d.get_str();
      first = false;
    }
    if (first) os << "0";
    return os.str();
  }
};

/// Homomorphism between canonical-form groups: the matrix sends the j-th
/// domain generator to the column-j combination of codomain generators.
/// Entries over torsion targets are read modulo the torsion orders.
struct GroupHom {
  FgAbGroup domain;
  FgAbGroup codomain;
  IntMatrix matrix;  // codomain gens x domain gens

  GroupHom() = default;
  GroupHom(FgAbGroup dom, FgAbGroup cod, IntMatrix m)
      : domain(std::move(dom)), codomain(std::move(cod)), matrix(std::move(m)) {
    if (matrix.rows() != codomain.num_generators() || matrix.cols() != domain.num_generators())
      throw std::invalid_argument("hom matrix shape mismatch");
  }

  static GroupHom zero(FgAbGroup dom, FgAbGroup cod) {
    IntMatrix m(cod.num_generators(), dom.num_generators());
    return GroupHom(std::move(dom), std::move(cod), std::move(m));
  }

  std::vector<mpz_class> apply(const std::vector<mpz_class>& x) const {
    return codomain.reduce(mat_apply(matrix, x));
  }

  /// The matrix must map each domain relation into the codomain relations.
  bool is_well_defined() const {
    for (std::size_t j = 0; j < domain.torsion.size(); ++j) {
      std::vector<mpz_class> img = matrix.column(j);
      for (auto& e : img) e *= domain.torsion[j];
      if (!codomain.is_zero(img)) return false;
    }
    return true;
  }

  GroupHom compose_after(const GroupHom& inner) const {  // this o inner
    if (inner.codomain != domain) throw std::invalid_argument("hom composition mismatch");
    return GroupHom(inner.domain, codomain, matrix * inner.matrix);
  }

  GroupHom operator+(const GroupHom& o) const {
    if (domain != o.domain || codomain != o.codomain)
      throw std::invalid_argument("hom sum mismatch");
    return GroupHom(domain, codomain, matrix + o.matrix);
  }

  bool equals_reduced(const GroupHom& o) const {
    if (domain != o.domain || codomain != o.codomain) return false;
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      auto a = codomain.reduce(matrix.column(j));
      auto b = codomain.reduce(o.matrix.column(j));
      if (a != b) return false;
    }
    return true;
  }
};

/// Quotient presentation Z^k / im(relations) in canonical form, together
/// with both coordinate directions.
struct Presentation {
  FgAbGroup group;
  IntMatrix coord_rows;  // gens x k : ambient vector -> canonical coords
  IntMatrix gen_lift;    // k x gens : canonical generator -> ambient vector

  std::vector<mpz_class> coords(const std::vector<mpz_class>& ambient) const {
    return group.reduce(mat_apply(coord_rows, ambient));
  }
  std::vector<mpz_class> lift(const std::vector<mpz_class>& coords) const {
    return mat_apply(gen_lift, coords);
  }
};

inline Presentation present(std::size_t ambient_rank, const IntMatrix& relations) {
  if (relations.rows() != ambient_rank && relations.cols() != 0)
    throw std::invalid_argument("present: relation shape mismatch");
  IntMatrix rel = relations.rows() == ambient_rank
                      ? relations
                      : IntMatrix(ambient_rank, 0);
  SnfDecomposition d = snf(rel);
  std::size_t mn = std::min(ambient_rank, rel.cols());

  std::vector<std::size_t> kept;
  FgAbGroup g;
  for (std::size_t t = 0; t < ambient_rank; ++t) {
    mpz_class dt = t < mn ? d.s(t, t) : mpz_class(0);
    if (dt == 1) continue;
    kept.push_back(t);
    if (dt == 0)
      ++g.free_rank;
    else
      g.torsion.push_back(dt);
  }
  // SNF diagonal is an ascending chain, so torsion entries are already
  // canonical and precede the free slots.
  Presentation p;
  p.group = std::move(g);
  p.coord_rows = IntMatrix(kept.size(), ambient_rank);
  p.gen_lift = IntMatrix(ambient_rank, kept.size());
  for (std::size_t row = 0; row < kept.size(); ++row)
    for (std::size_t c = 0; c < ambient_rank; ++c) p.coord_rows(row, c) = d.u(kept[row], c);
  for (std::size_t col = 0; col < kept.size(); ++col)
    for (std::size_t r = 0; r < ambient_rank; ++r) p.gen_lift(r, col) = d.u_inv(r, kept[col]);
  return p;
}

struct SubgroupResult {
  FgAbGroup group;
  GroupHom morphism;  // inclusion (kernel/image) or projection (cokernel)
};

namespace detail {

inline IntMatrix solve_in_basis(const IntMatrix& basis, const IntMatrix& targets,
                                const char* what) {
  IntMatrix out(basis.cols(), targets.cols());
  for (std::size_t j = 0; j < targets.cols(); ++j) {
    auto sol = solve(basis, targets.column(j));
    if (!sol) throw std::runtime_error(std::string("internal: unsolvable system in ") + what);
    out.set_column(j, *sol);
  }
  return out;
}

inline IntMatrix top_rows(const IntMatrix& m, std::size_t k) {
  IntMatrix t(k, m.cols());
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(i, j) = m(i, j);
  return t;
}

/// Lattice {x : F x lies in im(R_cod)}, as a basis matrix.
inline IntMatrix preimage_lattice(const IntMatrix& f, const IntMatrix& r_cod,
                                  std::size_t domain_gens) {
  IntMatrix a = f.hconcat(r_cod);
  IntMatrix ker = kernel_lattice(a);
  IntMatrix proj = top_rows(ker, domain_gens);
  return image_lattice(proj);
}

}  // namespace detail

inline SubgroupResult kernel(const GroupHom& f) {
  if (!f.is_well_defined()) throw std::invalid_argument("not a homomorphism");
  const std::size_t k = f.domain.num_generators();
  IntMatrix basis = detail::preimage_lattice(f.matrix, f.codomain.relation_matrix(), k);
  IntMatrix rel = detail::solve_in_basis(basis, f.domain.relation_matrix(), "kernel");
  Presentation p = present(basis.cols(), rel);
  IntMatrix incl = basis * p.gen_lift;
  return {p.group, GroupHom(p.group, f.domain, incl)};
}

inline SubgroupResult image(const GroupHom& f) {
  if (!f.is_well_defined()) throw std::invalid_argument("not a homomorphism");
  IntMatrix r_cod = f.codomain.relation_matrix();
  IntMatrix basis = image_lattice(f.matrix.hconcat(r_cod));
  IntMatrix rel = detail::solve_in_basis(basis, r_cod, "image");
  Presentation p = present(basis.cols(), rel);
  IntMatrix incl = basis * p.gen_lift;
  return {p.group, GroupHom(p.group, f.codomain, incl)};
}

struct CokernelResult {
  FgAbGroup group;
  GroupHom projection;
  Presentation presentation;  // over the codomain's generator coordinates
};

inline CokernelResult cokernel(const GroupHom& f) {
  if (!f.is_well_defined()) throw std::invalid_argument("not a homomorphism");
  IntMatrix rel = f.matrix.hconcat(f.codomain.relation_matrix());
  Presentation p = present(f.codomain.num_generators(), rel);
  GroupHom proj(f.codomain, p.group, p.coord_rows);
  return {p.group, proj, p};
}

/// Membership of a codomain element in the image of f.
inline bool in_image(const GroupHom& f, const std::vector<mpz_class>& y) {
  IntMatrix a = f.matrix.hconcat(f.codomain.relation_matrix());
  return solve(a, y).has_value();
}

struct ExactnessReport {
  bool composite_is_zero = false;
  bool image_equals_kernel = false;
  // For a failure, an element of ker(g) not in im(f) (or a domain generator
  // whose composite image is nonzero), in middle-group coordinates.
  std::optional<std::vector<mpz_class>> witness;
  std::string note;

  bool exact() const { return composite_is_zero && image_equals_kernel; }
};

inline ExactnessReport is_exact_at(const GroupHom& f, const GroupHom& g) {
  if (f.codomain != g.domain) throw std::invalid_argument("exactness: domain mismatch");
  if (!f.is_well_defined() || !g.is_well_defined())
    throw std::invalid_argument("not a homomorphism");
  ExactnessReport rep;
  const std::size_t mid = f.codomain.num_generators();

  rep.composite_is_zero = true;
  IntMatrix comp = g.matrix * f.matrix;
  for (std::size_t j = 0; j < comp.cols(); ++j) {
    if (!g.codomain.is_zero(comp.column(j))) {
      rep.composite_is_zero = false;
      rep.witness = f.codomain.reduce(f.matrix.column(j));
      rep.note = "composite nonzero on a domain generator";
      break;
    }
  }

  IntMatrix r_mid = f.codomain.relation_matrix();
  IntMatrix im_basis = image_lattice(f.matrix.hconcat(r_mid));
  IntMatrix ker_basis = detail::preimage_lattice(g.matrix, g.codomain.relation_matrix(), mid);

  bool equal = true;
  for (std::size_t j = 0; j < ker_basis.cols() && equal; ++j) {
    auto col = ker_basis.column(j);
    if (!solve(im_basis, col)) {
      equal = false;
      if (!rep.witness) {
        rep.witness = f.codomain.reduce(col);
        rep.note = "kernel element outside the image";
      }
    }
  }
  for (std::size_t j = 0; j < im_basis.cols() && equal; ++j) {
    if (!solve(ker_basis, im_basis.column(j))) {
      equal = false;
      if (!rep.witness) {
        rep.witness = f.codomain.reduce(im_basis.column(j));
        rep.note = "image element outside the kernel";
      }
    }
  }
  rep.image_equals_kernel = equal;
  return rep;
}

/// Canonical form of a direct sum.
inline FgAbGroup direct_sum(const FgAbGroup& a, const FgAbGroup& b) {
  std::vector<mpz_class> tors;
  tors.insert(tors.end(), a.torsion.begin(), a.torsion.end());
  tors.insert(tors.end(), b.torsion.begin(), b.torsion.end());
  IntMatrix diag(tors.size(), tors.size());
  for (std::size_t i = 0; i < tors.size(); ++i) diag(i, i) = tors[i];
  Presentation p = present(tors.size(), diag);
  FgAbGroup g = p.group;
  g.free_rank += a.free_rank + b.free_rank;
  return g;
}

/// All elements of a finite group, in deterministic order. Throws if the
/// order exceeds the cap.
inline std::vector<std::vector<mpz_class>> all_elements(const FgAbGroup& g,
                                                        unsigned long cap = 2000000) {
  auto ord = g.order();
  if (!ord) throw std::invalid_argument("all_elements: infinite group");
  if (*ord > cap) throw std::invalid_argument("all_elements: group too large");
  std::vector<std::vector<mpz_class>> out;
  std::vector<mpz_class> cur = g.zero();
  unsigned long n = ord->get_ui();
  out.reserve(n);
  for (unsigned long i = 0; i < n; ++i) {
    out.push_back(cur);
    // increment little-endian over torsion ranges
    for (std::size_t d = 0; d < g.torsion.size(); ++d) {
      cur[d] += 1;
      if (cur[d] < g.torsion[d]) break;
      cur[d] = 0;
    }
  }
  return out;
}

}  // namespace picmot::core
