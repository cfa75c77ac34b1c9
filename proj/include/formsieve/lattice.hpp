#pragma once

// Equivalence classes U(a) of primitive residue pairs under unit scaling,
// the subset U'(d) inside Lambda*_d, the class lattices G(A) with their
// shortest vectors, exact lattice-point counts over convex regions, and the
// empirical level-of-distribution diagnostic.

#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "formsieve/localdensity.hpp"

namespace formsieve::lattice {

using forms::FormSystem;
using localdensity::ModulusVector;

inline constexpr u64 kDefaultClassCap = 10000;

/// One equivalence class of primitive pairs mod a; two pairs are equivalent
/// iff one is a unit multiple of the other. The representative is the
/// lexicographically least member.
struct PrimitiveClass {
  std::pair<u64, u64> representative;
  u64 modulus = 1;
};

/// Full partition of { y in [0,a)^2 : gcd(y1, y2, a) = 1 }. Every class has
/// exactly phi(a) members.
inline std::vector<PrimitiveClass> classes(u64 a, u64 cap = kDefaultClassCap) {
  if (a == 0) throw domain_error("classes: modulus must be positive");
  if (a > cap) throw cap_exceeded("classes: modulus exceeds cap");
  if (a == 1) return {PrimitiveClass{{0, 0}, 1}};

  std::vector<u64> units;
  for (u64 lam = 1; lam < a; ++lam)
    if (numutil::gcd_u64(lam, a) == 1) units.push_back(lam);

  std::vector<bool> visited(a * a, false);
  std::vector<PrimitiveClass> result;
  for (u64 y1 = 0; y1 < a; ++y1) {
    for (u64 y2 = 0; y2 < a; ++y2) {
      if (visited[y1 * a + y2]) continue;
      if (numutil::gcd_u64(numutil::gcd_u64(y1, y2), a) != 1) continue;
      for (u64 lam : units) visited[(lam * y1 % a) * a + lam * y2 % a] = true;
      result.push_back(PrimitiveClass{{y1, y2}, a});
    }
  }
  return result;
}

/// U'(d): the classes of U(d_1...d_g) lying inside Lambda*_d. Membership is
/// well defined on classes, so testing the representative suffices.
inline std::vector<PrimitiveClass> classes_in_lambda_star(const FormSystem& sys,
                                                          const ModulusVector& d,
                                                          u64 cap = kDefaultClassCap) {
  if (d.size() != sys.g())
    throw domain_error("classes_in_lambda_star: vector length must equal g");
  u128 a_wide = 1;
  for (u64 di : d) {
    if (di == 0) throw domain_error("classes_in_lambda_star: entries must be positive");
    a_wide *= di;
  }
  if (a_wide > cap) throw cap_exceeded("classes_in_lambda_star: modulus exceeds cap");
  u64 a = static_cast<u64>(a_wide);

  std::vector<PrimitiveClass> result;
  for (const PrimitiveClass& cls : classes(a, cap)) {
    bool inside = true;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] == 1) continue;
      if (forms::eval_mod(sys.forms[i], cls.representative.first, cls.representative.second,
                          d[i]) != 0) {
        inside = false;
        break;
      }
    }
    if (inside) result.push_back(cls);
  }
  return result;
}

/// rho*(d) = #U'(d) phi(d_1...d_g); must agree with the direct enumeration.
inline u64 rho_star_via_classes(const FormSystem& sys, const ModulusVector& d,
                                u64 cap = kDefaultClassCap) {
  std::vector<PrimitiveClass> uprime = classes_in_lambda_star(sys, d, cap);
  u128 a = 1;
  for (u64 di : d) a *= di;
  u128 result = static_cast<u128>(uprime.size()) * numutil::euler_phi(a);
  if (result > ~u64{0}) throw overflow_error("rho_star_via_classes: overflow");
  return static_cast<u64>(result);
}

/// Reduced basis of G(A) = Z y + a Z^2 with a shortest nonzero vector.
/// |minimal_vector|^2 <= (2/sqrt 3) a always holds for planar lattices; the
/// flag records (rather than rejects) a violation.
struct ReducedLattice {
  std::array<std::pair<i64, i64>, 2> basis;
  u64 determinant = 1;
  std::pair<i64, i64> minimal_vector{0, 0};
  bool exceeds_minkowski = false;
};

namespace detail {

inline i128 dot(const std::pair<i128, i128>& u, const std::pair<i128, i128>& v) {
  return u.first * v.first + u.second * v.second;
}

inline i128 norm2(const std::pair<i128, i128>& u) { return dot(u, u); }

// tie order on candidate minimal vectors: smallest (|v1|, |v2|), then the
// sign choice with the larger (v1, v2)
inline bool tie_less(const std::pair<i128, i128>& a, const std::pair<i128, i128>& b) {
  auto key = [](const std::pair<i128, i128>& v) {
    return std::array<i128, 4>{v.first < 0 ? -v.first : v.first,
                               v.second < 0 ? -v.second : v.second, -v.first, -v.second};
  };
  return key(a) < key(b);
}

}  // namespace detail

inline ReducedLattice reduce_class_lattice(const PrimitiveClass& cls) {
  const i128 a = cls.modulus;
  std::array<std::pair<i128, i128>, 3> rows = {
      std::pair<i128, i128>{static_cast<i128>(cls.representative.first),
                            static_cast<i128>(cls.representative.second)},
      {a, 0},
      {0, a}};

  // Hermite-style elimination of first coordinates down to one generator.
  while (true) {
    int i = -1, j = -1;
    for (int k = 0; k < 3; ++k) {
      if (rows[k].first != 0) {
        if (i < 0)
          i = k;
        else {
          j = k;
          break;
        }
      }
    }
    if (j < 0) break;
    auto abs_first = [&](int k) { return numutil::abs128(rows[k].first); };
    if (abs_first(i) > abs_first(j)) std::swap(i, j);
    i128 q = rows[j].first / rows[i].first;
    rows[j].first -= q * rows[i].first;
    rows[j].second -= q * rows[i].second;
  }

  std::pair<i128, i128> b1{0, 0};
  i128 g2 = 0;
  for (const auto& r : rows) {
    if (r.first != 0)
      b1 = r;
    else
      g2 = static_cast<i128>(numutil::gcd_u128(numutil::abs128(g2), numutil::abs128(r.second)));
  }
  if (b1.first < 0) {
    b1.first = -b1.first;
    b1.second = -b1.second;
  }
  std::pair<i128, i128> b2{0, g2};

  // Lagrange (Gauss) reduction; on exit b1 is a shortest vector.
  while (true) {
    if (detail::norm2(b1) > detail::norm2(b2)) std::swap(b1, b2);
    i128 d = detail::dot(b1, b2);
    i128 n1 = detail::norm2(b1);
    i128 q0 = d >= 0 ? d / n1 : -((-d + n1 - 1) / n1);
    std::pair<i128, i128> best = b2;
    for (i128 q : {q0, q0 + 1}) {
      std::pair<i128, i128> cand{b2.first - q * b1.first, b2.second - q * b1.second};
      if (detail::norm2(cand) < detail::norm2(best)) best = cand;
    }
    if (detail::norm2(best) >= detail::norm2(b2)) break;
    b2 = best;
  }
  if (detail::norm2(b1) > detail::norm2(b2)) std::swap(b1, b2);

  // all shortest vectors of a reduced planar basis have small coordinates
  std::pair<i128, i128> vmin = b1;
  for (int i = -2; i <= 2; ++i) {
    for (int j = -2; j <= 2; ++j) {
      if (i == 0 && j == 0) continue;
      std::pair<i128, i128> v{i * b1.first + j * b2.first, i * b1.second + j * b2.second};
      if (detail::norm2(v) < detail::norm2(vmin) ||
          (detail::norm2(v) == detail::norm2(vmin) && detail::tie_less(v, vmin)))
        vmin = v;
    }
  }

  ReducedLattice out;
  out.basis = {std::pair<i64, i64>{static_cast<i64>(b1.first), static_cast<i64>(b1.second)},
               std::pair<i64, i64>{static_cast<i64>(b2.first), static_cast<i64>(b2.second)}};
  i128 det = b1.first * b2.second - b1.second * b2.first;
  out.determinant = static_cast<u64>(numutil::abs128(det));
  out.minimal_vector = {static_cast<i64>(vmin.first), static_cast<i64>(vmin.second)};
  i128 n = detail::norm2(vmin);
  out.exceeds_minkowski = 3 * n * n > 4 * a * a;
  return out;
}

/// Shortest nonzero vector of G(A), ties broken deterministically.
inline std::pair<i64, i64> minimal_vector(const PrimitiveClass& cls) {
  return reduce_class_lattice(cls).minimal_vector;
}

/// #(Lambda_d intersect R intersect Psi) for a region R in absolute
/// coordinates: integer points with d_i | q_i(x) and x = z (mod |D|).
inline u64 count_lattice_region(const FormSystem& sys, const ModulusVector& d,
                                const Region& region, u64 point_cap = 100000000ull) {
  if (d.size() != sys.g())
    throw domain_error("count_lattice_region: vector length must equal g");
  u64 count = 0;
  localdensity::for_each_psi_point(sys, region, point_cap, [&](i128 x1, i128 x2) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] == 1) continue;
      i128 v = forms::eval(sys.forms[i], x1, x2) % static_cast<i128>(d[i]);
      if (v != 0) return;
    }
    ++count;
  });
  return count;
}

/// The finite stand-in for the supremum over regions: disks of radii
/// M/(2 pi) {1, 1/2, 1/4} and boxes of perimeter at most M at the given
/// centers (coordinates rationalized at denominator 16).
inline std::vector<Region> default_region_family(double M,
                                                 std::vector<std::pair<double, double>> centers = {
                                                     {0.0, 0.0}}) {
  if (M <= 0) throw domain_error("default_region_family: M must be positive");
  auto rat = [](double x) { return Rational(static_cast<i128>(std::llround(x * 16)), 16); };
  std::vector<Region> family;
  const double r0 = M / (2.0 * M_PI);
  const auto& c0 = centers.front();
  for (double scale : {1.0, 0.5, 0.25}) {
    Rational r = rat(r0 * scale);
    if (r.num <= 0) continue;
    family.push_back(Region::disk(rat(c0.first), rat(c0.second), r));
  }
  for (const auto& c : centers) {
    for (double scale : {1.0, 0.5, 0.25}) {
      double half = M * scale / 8.0;  // perimeter of the square = M * scale
      Rational h = rat(half);
      if (h.num <= 0) continue;
      family.push_back(Region::box(rat(c.first) - h, rat(c.second) - h, rat(c.first) + h,
                                   rat(c.second) + h));
      if (family.size() >= 8) return family;
    }
  }
  return family;
}

struct LodRow {
  ModulusVector d;
  u64 a = 1;
  double max_error = 0.0;  // max over the family of |count - main term|
  double main_term = 0.0;  // main term of the region attaining the max
  double min_vec_len = 0.0;  // min |v(A)| over A in U'(d); 0 if U' is empty
};

struct LodReport {
  std::vector<LodRow> rows;
  double t_hat = 0.0;  // sum of max errors over d
};

/// Scans all d with d_i <= Q_i and (d_i; D) = 1, comparing exact counts
/// against vol(R) rho(d) / (d_1...d_g D)^2 over the region family.
inline LodReport lod_diagnostic(const FormSystem& sys, const std::vector<u64>& Q,
                                const std::vector<Region>& family,
                                u64 enum_cap = localdensity::kDefaultEnumCap,
                                u64 class_cap = kDefaultClassCap) {
  if (Q.size() != sys.g()) throw domain_error("lod_diagnostic: Q length must equal g");
  if (family.empty()) throw domain_error("lod_diagnostic: empty region family");
  const double D2 = static_cast<double>(sys.abs_D) * static_cast<double>(sys.abs_D);

  std::map<u64, std::vector<PrimitiveClass>> class_cache;
  LodReport report;
  ModulusVector d(sys.g(), 1);
  while (true) {
    bool coprime = true;
    for (u64 di : d)
      if (numutil::gcd_u128(di, sys.abs_D) != 1) {
        coprime = false;
        break;
      }
    if (coprime) {
      LodRow row;
      row.d = d;
      u128 a_wide = 1;
      for (u64 di : d) a_wide *= di;
      row.a = static_cast<u64>(a_wide);
      u64 r = localdensity::rho(sys, d, enum_cap);
      double aD2 = static_cast<double>(row.a) * static_cast<double>(row.a) * D2;
      for (const Region& region : family) {
        double main = region.area() * static_cast<double>(r) / aD2;
        double err = std::abs(static_cast<double>(count_lattice_region(sys, d, region)) - main);
        if (err >= row.max_error) {
          row.max_error = err;
          row.main_term = main;
        }
      }
      auto it = class_cache.find(row.a);
      if (it == class_cache.end())
        it = class_cache.emplace(row.a, classes(row.a, class_cap)).first;
      double best = 0.0;
      for (const PrimitiveClass& cls : it->second) {
        bool inside = true;
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (d[i] == 1) continue;
          if (forms::eval_mod(sys.forms[i], cls.representative.first,
                              cls.representative.second, d[i]) != 0) {
            inside = false;
            break;
          }
        }
        if (!inside) continue;
        auto v = minimal_vector(cls);
        double len = std::hypot(static_cast<double>(v.first), static_cast<double>(v.second));
        if (best == 0.0 || len < best) best = len;
      }
      row.min_vec_len = best;
      report.t_hat += row.max_error;
      report.rows.push_back(std::move(row));
    }
    std::size_t pos = 0;
    while (pos < d.size() && ++d[pos] > Q[pos]) {
      d[pos] = 1;
      ++pos;
    }
    if (pos == d.size()) break;
  }
  return report;
}

inline std::string lod_csv(const LodReport& report, std::size_t g) {
  std::ostringstream out;
  for (std::size_t i = 0; i < g; ++i) out << "d" << i + 1 << ",";
  out << "a,max_error,main_term,min_vec_len\n";
  for (const LodRow& row : report.rows) {
    for (u64 di : row.d) out << di << ",";
    out << row.a << "," << row.max_error << "," << row.main_term << "," << row.min_vec_len
        << "\n";
  }
  return out.str();
}

struct LodGrowth {
  std::vector<std::pair<double, double>> samples;  // (Q = prod Q_i, T_hat)
  double exponent = 0.0;                           // least-squares slope of log T vs log Q
};

/// Runs the diagnostic for Q = (q,...,q) over the given q values and fits
/// the growth exponent of T_hat in Q.
inline LodGrowth lod_growth(const FormSystem& sys, const std::vector<u64>& q_values,
                            const std::vector<Region>& family,
                            u64 enum_cap = localdensity::kDefaultEnumCap,
                            u64 class_cap = kDefaultClassCap) {
  LodGrowth g;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (u64 q : q_values) {
    std::vector<u64> Q(sys.g(), q);
    LodReport rep = lod_diagnostic(sys, Q, family, enum_cap, class_cap);
    double bigq = 1.0;
    for (u64 qi : Q) bigq *= static_cast<double>(qi);
    g.samples.push_back({bigq, rep.t_hat});
    if (rep.t_hat > 0) {
      double x = std::log(bigq), y = std::log(rep.t_hat);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
  }
  if (n >= 2) {
    double denom = static_cast<double>(n) * sxx - sx * sx;
    if (denom != 0) g.exponent = (static_cast<double>(n) * sxy - sx * sy) / denom;
  }
  return g;
}

}  // namespace formsieve::lattice
