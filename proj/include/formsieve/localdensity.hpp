#pragma once

// Multiplicative local densities for a form system: the solution counts
// rho / rho*, the transition modulus psi, the sifting density omega in its
// closed, defining-sum, and rho-row forms, and the sifted-set counts |A_d|
// with their remainders R_d.
//
// All counts are exact integers and every omega value is an exact rational.
// rho and rho* are defined as counts over [0, d_1...d_g)^2; the congruence
// set is periodic with period lcm(d), so the enumeration runs over the
// fundamental domain [0, lcm)^2 and scales by (d_1...d_g / lcm)^2. The
// enumeration cap applies to the lcm actually enumerated.

#include <map>

#include "formsieve/forms.hpp"
#include "formsieve/rational.hpp"
#include "formsieve/region.hpp"

namespace formsieve::localdensity {

class not_squarefree : public error {
  using error::error;
};
class not_coprime_to_d : public error {
  using error::error;
};

using forms::FormSystem;
using forms::QuadraticForm;

/// d = (d_1, ..., d_g), the argument of rho, rho*, psi.
using ModulusVector = std::vector<u64>;

inline constexpr u64 kDefaultEnumCap = 10000;

namespace detail {

inline void validate_vector(const FormSystem& sys, const ModulusVector& d) {
  if (d.size() != sys.g())
    throw domain_error("ModulusVector length must equal the number of forms");
  for (u64 di : d)
    if (di == 0) throw domain_error("ModulusVector entries must be positive");
}

inline u64 vector_lcm(const ModulusVector& d, u64 cap) {
  u128 L = 1;
  for (u64 di : d) {
    L = numutil::lcm_u128(L, di);
    if (L > cap) throw cap_exceeded("local density: lcm " + numutil::to_string(L) +
                                    " exceeds enumeration cap " + std::to_string(cap));
  }
  return static_cast<u64>(L);
}

inline u128 vector_product(const ModulusVector& d) {
  u128 a = 1;
  for (u64 di : d) {
    u128 next = a * di;
    if (next / di != a) throw overflow_error("local density: d_1...d_g exceeds 128 bits");
    a = next;
  }
  return a;
}

inline u64 vector_radical(const ModulusVector& d) {
  u64 rad = 1;
  for (u64 di : d)
    for (const auto& e : numutil::factorize(di).factors) {
      u64 p = static_cast<u64>(e.prime);
      if (rad % p != 0) rad *= p;
    }
  return rad;
}

struct FormMod {
  u64 m, am, bm, cm;
};

inline std::vector<FormMod> reduced_forms(const FormSystem& sys, const ModulusVector& d) {
  std::vector<FormMod> fm;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 1) continue;
    u64 m = d[i];
    auto reduce = [m](i128 v) -> u64 {
      i128 r = v % static_cast<i128>(m);
      if (r < 0) r += static_cast<i128>(m);
      return static_cast<u64>(r);
    };
    const QuadraticForm& q = sys.forms[i];
    fm.push_back({m, reduce(q.a), reduce(2 * static_cast<i128>(q.b)), reduce(q.c)});
  }
  return fm;
}

// Counts x in [0,L)^2 with d_i | q_i(x), optionally restricted to
// gcd(x1, x2, rad) = 1, then rescales to the [0, a)^2 box.
inline u64 counted_density(const FormSystem& sys, const ModulusVector& d, u64 cap,
                           bool primitive_only) {
  validate_vector(sys, d);
  u64 L = vector_lcm(d, cap);
  u128 a = vector_product(d);
  u64 rad = primitive_only ? vector_radical(d) : 1;
  std::vector<FormMod> fm = reduced_forms(sys, d);

  u64 count = 0;
  for (u64 x2 = 0; x2 < L; ++x2) {
    for (u64 x1 = 0; x1 < L; ++x1) {
      bool ok = true;
      for (const FormMod& f : fm) {
        u64 h = (f.am * x1 + f.bm * x2) % f.m;
        if ((h * x1 + f.cm * x2 % f.m * x2) % f.m != 0) {
          ok = false;
          break;
        }
      }
      if (ok && primitive_only && rad > 1) {
        if (numutil::gcd_u64(numutil::gcd_u64(x1, x2), rad) != 1) ok = false;
      }
      if (ok) ++count;
    }
  }

  u128 scale = a / L;
  u128 result = static_cast<u128>(count) * scale * scale;
  if (result > ~u64{0}) throw overflow_error("local density: count exceeds 64 bits");
  return static_cast<u64>(result);
}

}  // namespace detail

/// rho(d) = #(Lambda_d intersect [0, d_1...d_g)^2).
inline u64 rho(const FormSystem& sys, const ModulusVector& d, u64 cap = kDefaultEnumCap) {
  return detail::counted_density(sys, d, cap, false);
}

/// rho*(d): as rho with the extra condition gcd(x1, x2, d_1...d_g) = 1.
inline u64 rho_star(const FormSystem& sys, const ModulusVector& d, u64 cap = kDefaultEnumCap) {
  return detail::counted_density(sys, d, cap, true);
}

/// Both counts plus the modulus, bundled.
struct DensityValue {
  u64 rho = 0;
  u64 rho_star = 0;
  u128 modulus = 1;
};

inline DensityValue density_value(const FormSystem& sys, const ModulusVector& d,
                                  u64 cap = kDefaultEnumCap) {
  return {rho(sys, d, cap), rho_star(sys, d, cap), detail::vector_product(d)};
}

/// psi(p^{a_1},...,p^{a_g}) = p^{ceil(max(a_i)/2)}, extended multiplicatively.
inline u128 psi(const ModulusVector& d) {
  std::map<u64, unsigned> max_exp;
  for (u64 di : d)
    for (const auto& e : numutil::factorize(di).factors) {
      unsigned& cur = max_exp[static_cast<u64>(e.prime)];
      cur = std::max(cur, e.exponent);
    }
  u128 result = 1;
  for (const auto& [p, e] : max_exp) {
    unsigned half = (e + 1) / 2;
    for (unsigned i = 0; i < half; ++i) {
      u128 next = result * p;
      if (next / p != result) throw overflow_error("psi: overflow");
      result = next;
    }
  }
  return result;
}

/// Right-hand side of the transition identity:
///   rho(d) = sum over b | psi(d) of rho*(c) * ((d_1;b^2)...(d_g;b^2)/b)^2
/// with c_i = d_i / (d_i; b^2). Must equal rho(d).
inline u64 rho_via_transition(const FormSystem& sys, const ModulusVector& d,
                              u64 cap = kDefaultEnumCap) {
  detail::validate_vector(sys, d);
  u128 ps = psi(d);
  if (ps > ~u64{0}) throw cap_exceeded("rho_via_transition: psi exceeds 64 bits");

  u128 total = 0;
  for (u64 b : numutil::divisors(static_cast<u64>(ps))) {
    u128 b2 = static_cast<u128>(b) * b;
    ModulusVector c(d.size());
    u128 gcd_prod = 1;
    for (std::size_t i = 0; i < d.size(); ++i) {
      u64 gi = static_cast<u64>(numutil::gcd_u128(d[i], b2));
      c[i] = d[i] / gi;
      gcd_prod *= gi;
    }
    if (gcd_prod % b != 0)
      throw error("rho_via_transition: internal error, b does not divide the gcd product");
    u128 factor = gcd_prod / b;
    total += static_cast<u128>(rho_star(sys, c, cap)) * factor * factor;
  }
  if (total > ~u64{0}) throw overflow_error("rho_via_transition: overflow");
  return static_cast<u64>(total);
}

/// omega(p) in closed form:
///   g + sum chi_i(p) - (1/p)(g - 1 + sum chi_i(p)),  chi_i = (delta_i / p),
/// for p not dividing D; zero for p | D.
inline Rational omega_closed(const FormSystem& sys, u64 p) {
  if (!numutil::is_prime_u64(p)) throw domain_error("omega: p must be prime");
  if (sys.divides_D(p)) return Rational(0);
  i128 chi_sum = 0;
  for (const QuadraticForm& q : sys.forms) chi_sum += numutil::jacobi(forms::discriminant(q), p);
  i128 g = static_cast<i128>(sys.g());
  return Rational((g + chi_sum) * static_cast<i128>(p) - (g - 1 + chi_sum), p);
}

/// omega(p) by the defining inclusion-exclusion sum over (c_1,...,c_g) with
/// c_i | p and p | c_1...c_g, each rho evaluated by enumeration.
inline Rational omega_defining_sum(const FormSystem& sys, u64 p, u64 cap = kDefaultEnumCap) {
  if (!numutil::is_prime_u64(p)) throw domain_error("omega: p must be prime");
  if (sys.divides_D(p)) return Rational(0);
  const std::size_t g = sys.g();
  if (g > 20) throw cap_exceeded("omega_defining_sum: too many forms");
  Rational sum(0);
  for (unsigned mask = 1; mask < (1u << g); ++mask) {
    ModulusVector c(g, 1);
    unsigned k = 0;
    for (std::size_t i = 0; i < g; ++i)
      if (mask & (1u << i)) {
        c[i] = p;
        ++k;
      }
    i128 denom = 1;
    for (unsigned i = 0; i < 2 * k; ++i) {
      if (__builtin_mul_overflow(denom, static_cast<i128>(p), &denom))
        throw overflow_error("omega_defining_sum: p^{2k} overflow");
    }
    Rational term(static_cast<i128>(rho(sys, c, cap)), denom);
    // mu(p) * mu(c_1)...mu(c_g) = (-1)^{1+k}
    sum = (k % 2 == 0) ? sum - term : sum + term;
  }
  return Rational(p) * sum;
}

/// omega(p) = (rho(p,1,...,1) + ... + rho(1,...,1,p) + 1 - g) / p.
inline Rational omega_lemma_form(const FormSystem& sys, u64 p, u64 cap = kDefaultEnumCap) {
  if (!numutil::is_prime_u64(p)) throw domain_error("omega: p must be prime");
  if (sys.divides_D(p)) return Rational(0);
  i128 sum = 0;
  for (std::size_t i = 0; i < sys.g(); ++i) {
    ModulusVector c(sys.g(), 1);
    c[i] = p;
    sum += rho(sys, c, cap);
  }
  return Rational(sum + 1 - static_cast<i128>(sys.g()), p);
}

/// Computes omega(p) by both the defining sum and the rho-row form and
/// requires them to agree; returns the common value.
inline Rational omega_from_definition(const FormSystem& sys, u64 p, u64 cap = kDefaultEnumCap) {
  Rational a = omega_defining_sum(sys, p, cap);
  Rational b = omega_lemma_form(sys, p, cap);
  if (a != b)
    throw error("omega_from_definition: defining sum and rho-row form disagree at p = " +
                std::to_string(p));
  return a;
}

/// omega extended multiplicatively to squarefree d coprime to D:
/// omega(d) = d * prod over p | d of omega(p)/p. omega(1) = 1.
inline Rational omega_squarefree(const FormSystem& sys, u64 d) {
  if (d == 0) throw domain_error("omega_squarefree: d must be positive");
  if (d == 1) return Rational(1);
  numutil::PrimeFactorization pf = numutil::factorize(d);
  for (const auto& e : pf.factors)
    if (e.exponent > 1) throw not_squarefree("omega_squarefree: d is not squarefree");
  if (numutil::gcd_u128(d, sys.abs_D) != 1)
    throw not_coprime_to_d("omega_squarefree: d shares a factor with D");
  Rational result(1);
  for (const auto& e : pf.factors) {
    u64 p = static_cast<u64>(e.prime);
    result = result * (omega_closed(sys, p) / Rational(p));
  }
  return Rational(d) * result;
}

/// Iterates x in Z^2 within the region with x = z (mod |D|).
template <typename Fn>
void for_each_psi_point(const FormSystem& sys, const lattice::Region& region, u64 point_cap,
                        Fn&& fn) {
  u64 D = sys.abs_D_u64();
  lattice::Region::BBox bb = region.bounding_box();
  if (bb.point_count() / (static_cast<u128>(D) * D) > point_cap)
    throw cap_exceeded("psi enumeration: region too large");
  auto first_at_least = [D](i128 lo, i128 r) {
    // smallest x >= lo with x = r (mod D)
    i128 delta = (r - lo) % static_cast<i128>(D);
    if (delta < 0) delta += static_cast<i128>(D);
    return lo + delta;
  };
  for (i128 x1 = first_at_least(bb.x_lo, sys.z.first); x1 <= bb.x_hi;
       x1 += static_cast<i128>(D)) {
    for (i128 x2 = first_at_least(bb.y_lo, sys.z.second); x2 <= bb.y_hi;
         x2 += static_cast<i128>(D)) {
      if (region.contains(x1, x2)) fn(x1, x2);
    }
  }
}

/// |A_d| computed two independent ways: directly, and through the
/// inclusion-exclusion over (c_1,...,c_g) with c_i | d and d | c_1...c_g.
struct AdCount {
  u64 direct = 0;
  i128 inclusion_exclusion = 0;

  bool consistent() const { return static_cast<i128>(direct) == inclusion_exclusion; }
};

inline AdCount count_Ad(const FormSystem& sys, u64 d, const lattice::Region& base_region,
                        u64 X, u64 point_cap = 100000000ull) {
  if (d == 0) throw domain_error("count_Ad: d must be positive");
  numutil::PrimeFactorization pf = numutil::factorize(d);
  for (const auto& e : pf.factors)
    if (e.exponent > 1) throw not_squarefree("count_Ad: d is not squarefree");

  lattice::Region region = base_region.scaled(Rational(static_cast<i128>(X)));
  AdCount result;

  // direct: d | q_1(x)...q_g(x)
  for_each_psi_point(sys, region, point_cap, [&](i128 x1, i128 x2) {
    u128 prod_mod = 1;
    for (const QuadraticForm& q : sys.forms) {
      i128 v = forms::eval(q, x1, x2) % static_cast<i128>(d);
      if (v < 0) v += static_cast<i128>(d);
      prod_mod = prod_mod * static_cast<u128>(v) % d;
    }
    if (prod_mod == 0) ++result.direct;
  });

  // inclusion-exclusion over divisor tuples
  std::vector<u64> divs = numutil::divisors(d);
  const std::size_t g = sys.g();
  int mu_d = numutil::mobius(pf);
  std::vector<std::size_t> idx(g, 0);
  while (true) {
    ModulusVector c(g);
    u64 rem = d;
    int sign = mu_d;
    for (std::size_t i = 0; i < g; ++i) {
      c[i] = divs[idx[i]];
      rem /= numutil::gcd_u64(rem, c[i]);
      sign *= numutil::mobius(c[i]);
    }
    if (rem == 1) {  // d | c_1...c_g
      u64 lambda_count = 0;
      for_each_psi_point(sys, region, point_cap, [&](i128 x1, i128 x2) {
        for (std::size_t i = 0; i < g; ++i) {
          if (c[i] == 1) continue;
          i128 v = forms::eval(sys.forms[i], x1, x2) % static_cast<i128>(c[i]);
          if (v != 0) return;
        }
        ++lambda_count;
      });
      result.inclusion_exclusion += sign * static_cast<i128>(lambda_count);
    }
    std::size_t pos = 0;
    while (pos < g && ++idx[pos] == divs.size()) {
      idx[pos] = 0;
      ++pos;
    }
    if (pos == g) break;
  }
  return result;
}

/// Y = X^2 vol(R0) / D^2, the smooth approximation to |A|.
inline Rational approximation_Y(const FormSystem& sys, const lattice::Region& base_region,
                                u64 X) {
  Rational vol = base_region.area_rational();
  Rational d2 = Rational(sys.D) * Rational(sys.D);
  return Rational(static_cast<i128>(X)) * Rational(static_cast<i128>(X)) * vol / d2;
}

/// R_d = |A_d| - (omega(d)/d) Y for squarefree d coprime to D, exact.
inline Rational remainder_Rd(const FormSystem& sys, u64 d, const lattice::Region& base_region,
                             u64 X, u64 point_cap = 100000000ull) {
  Rational y = approximation_Y(sys, base_region, X);
  AdCount counts = count_Ad(sys, d, base_region, X, point_cap);
  Rational main = omega_squarefree(sys, d) / Rational(static_cast<i128>(d)) * y;
  return Rational(static_cast<i128>(counts.direct)) - main;
}

/// Diagnostic for the remainder condition: sum over squarefree d < sqrt(Y)
/// coprime to D of mu^2(d) 4^{nu(d)} |R_d|.
inline Rational remainder_sum_diagnostic(const FormSystem& sys,
                                         const lattice::Region& base_region, u64 X,
                                         u64 point_cap = 100000000ull) {
  Rational y = approximation_Y(sys, base_region, X);
  double dmax = std::sqrt(std::max(0.0, y.to_double()));
  Rational total(0);
  for (u64 d = 1; d <= static_cast<u64>(dmax); ++d) {
    if (numutil::gcd_u128(d, sys.abs_D) != 1) continue;
    if (!numutil::is_squarefree(d)) continue;
    Rational rd = remainder_Rd(sys, d, base_region, X, point_cap);
    if (rd.num < 0) rd = -rd;
    i128 weight = 1;
    for (unsigned i = 0; i < numutil::nu_distinct(d); ++i) weight *= 4;
    total = total + Rational(weight) * rd;
  }
  return total;
}

}  // namespace formsieve::localdensity
