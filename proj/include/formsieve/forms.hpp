#pragma once

// Binary quadratic forms q(x,y) = a x^2 + 2b xy + c y^2, their invariants,
// the system modulus D, and the admissible residue point z that pins the
// translation class Psi = { x : x = z (mod D) }.

#include <utility>
#include <vector>

#include "formsieve/numutil.hpp"

namespace formsieve::forms {

class d_zero : public error {
  using error::error;
};
class no_admissible_residue : public error {
  using error::error;
};
class reducible_form : public error {
  using error::error;
};
class nonstandard_leading_coefficient : public error {
  using error::error;
};

/// a x^2 + 2b xy + c y^2 (b is the half middle coefficient).
struct QuadraticForm {
  i64 a = 1;
  i64 b = 0;
  i64 c = 1;

  friend bool operator==(const QuadraticForm&, const QuadraticForm&) = default;
};

/// delta = b^2 - a c. The factor-4 convention would only change the
/// invariant by a square, leaving every Legendre symbol untouched.
inline i128 discriminant(const QuadraticForm& q) {
  return static_cast<i128>(q.b) * q.b - static_cast<i128>(q.a) * q.c;
}

/// Irreducible over Z iff the discriminant is not a perfect square
/// (negative discriminants are never squares).
inline bool is_irreducible(const QuadraticForm& q) {
  return !numutil::is_perfect_square(discriminant(q));
}

/// Resultant of the dehomogenized quadratics Q_i(Y) = q_i(Y, 1):
/// (a1 c2 - a2 c1)^2 - 4 (a1 b2 - a2 b1)(b1 c2 - b2 c1),
/// the Sylvester determinant in closed form. Zero iff the forms share a
/// projective root.
inline i128 resultant(const QuadraticForm& q1, const QuadraticForm& q2) {
  i128 ac = static_cast<i128>(q1.a) * q2.c - static_cast<i128>(q2.a) * q1.c;
  i128 ab = static_cast<i128>(q1.a) * q2.b - static_cast<i128>(q2.a) * q1.b;
  i128 bc = static_cast<i128>(q1.b) * q2.c - static_cast<i128>(q2.b) * q1.c;
  return ac * ac - 4 * ab * bc;
}

/// q(x1, x2) with overflow checking (values must fit in 128 bits).
inline i128 eval(const QuadraticForm& q, i128 x1, i128 x2) {
  i128 t1, t2, t3, s;
  if (__builtin_mul_overflow(static_cast<i128>(q.a), x1, &t1) ||
      __builtin_mul_overflow(t1, x1, &t1) ||
      __builtin_mul_overflow(static_cast<i128>(2 * q.b), x1, &t2) ||
      __builtin_mul_overflow(t2, x2, &t2) ||
      __builtin_mul_overflow(static_cast<i128>(q.c), x2, &t3) ||
      __builtin_mul_overflow(t3, x2, &t3) ||
      __builtin_add_overflow(t1, t2, &s) || __builtin_add_overflow(s, t3, &s))
    throw overflow_error("eval: form value exceeds 128 bits");
  return s;
}

/// q(x) mod m, with all intermediates reduced (m > 0).
inline u64 eval_mod(const QuadraticForm& q, u64 x1, u64 x2, u64 m) {
  auto reduce = [m](i128 v) -> u64 {
    i128 r = v % static_cast<i128>(m);
    if (r < 0) r += static_cast<i128>(m);
    return static_cast<u64>(r);
  };
  u64 am = reduce(q.a), bm = reduce(2 * static_cast<i128>(q.b)), cm = reduce(q.c);
  u64 u = x1 % m, v = x2 % m;
  u128 h = (static_cast<u128>(am) * u + static_cast<u128>(bm) * v) % m;
  return static_cast<u64>((h * u + static_cast<u128>(cm) * v % m * v) % m);
}

/// A validated system of g irreducible forms together with D, its prime
/// support, and the residue point z with (q_i(z); D) = 1 for all i.
struct FormSystem {
  std::vector<QuadraticForm> forms;
  i128 D = 0;
  u128 abs_D = 0;
  std::pair<i128, i128> z{0, 0};
  bool strict_mode = true;
  std::vector<u64> d_primes;  // distinct primes dividing |D|, ascending

  std::size_t g() const { return forms.size(); }

  bool divides_D(u128 p) const { return abs_D % p == 0; }

  /// |D| as u64; the region-enumeration routines need a machine-word modulus.
  u64 abs_D_u64() const {
    if (abs_D > ~u64{0}) throw cap_exceeded("FormSystem: |D| exceeds 64 bits");
    return static_cast<u64>(abs_D);
  }
};

namespace detail {

inline void append_factor_primes(u128 value, std::vector<u64>& out) {
  for (const auto& e : numutil::factorize(value).factors) {
    if (e.prime > ~u64{0}) throw overflow_error("build_system: prime divisor of D exceeds 64 bits");
    out.push_back(static_cast<u64>(e.prime));
  }
}

inline i128 checked_mul_i128(i128 a, i128 b) {
  i128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw overflow_error("build_system: D exceeds 128 bits");
  return r;
}

}  // namespace detail

/// Validates the forms, computes D, and searches for an admissible residue
/// point z. The search runs per prime p | D over [0,p)^2 (scanning x2 rows,
/// x1 within a row) and combines the per-prime points by CRT, so only the
/// radical of D is ever scanned.
inline FormSystem build_system(std::vector<QuadraticForm> forms, bool strict_mode = true) {
  if (forms.empty()) throw domain_error("build_system: need at least one form");
  for (const QuadraticForm& q : forms) {
    if (q.a == 0) throw reducible_form("build_system: leading coefficient is zero");
    if (!is_irreducible(q))
      throw reducible_form("build_system: discriminant is a perfect square");
    if (strict_mode && ((q.a % 4) + 4) % 4 != 1)
      throw nonstandard_leading_coefficient("build_system: a != 1 (mod 4) in strict mode");
  }

  const std::size_t g = forms.size();
  std::vector<u64> primes_acc;

  i128 D = 1;
  for (u64 p : numutil::primes_below(2 * g + 1)) {
    D = detail::checked_mul_i128(D, static_cast<i128>(p));
    primes_acc.push_back(p);
  }
  for (const QuadraticForm& q : forms) {
    i128 block = detail::checked_mul_i128(
        detail::checked_mul_i128(static_cast<i128>(q.a), static_cast<i128>(q.c)),
        discriminant(q));
    if (block == 0) throw d_zero("build_system: a*c*delta vanishes");
    D = detail::checked_mul_i128(D, block);
    detail::append_factor_primes(numutil::abs128(static_cast<i128>(q.a)), primes_acc);
    detail::append_factor_primes(numutil::abs128(static_cast<i128>(q.c)), primes_acc);
    detail::append_factor_primes(numutil::abs128(discriminant(q)), primes_acc);
  }
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = i + 1; j < g; ++j) {
      i128 res = resultant(forms[i], forms[j]);
      if (res == 0) throw d_zero("build_system: resultant vanishes");
      D = detail::checked_mul_i128(D, res);
      detail::append_factor_primes(numutil::abs128(res), primes_acc);
    }

  std::sort(primes_acc.begin(), primes_acc.end());
  primes_acc.erase(std::unique(primes_acc.begin(), primes_acc.end()), primes_acc.end());

  // Admissible point per prime, then CRT componentwise.
  std::vector<std::pair<i128, u128>> cong1, cong2;
  for (u64 p : primes_acc) {
    bool found = false;
    for (u64 x2 = 0; x2 < p && !found; ++x2) {
      for (u64 x1 = 0; x1 < p && !found; ++x1) {
        bool ok = true;
        for (const QuadraticForm& q : forms) {
          if (eval_mod(q, x1, x2, p) == 0) {
            ok = false;
            break;
          }
        }
        if (ok) {
          cong1.push_back({static_cast<i128>(x1), p});
          cong2.push_back({static_cast<i128>(x2), p});
          found = true;
        }
      }
    }
    if (!found)
      throw no_admissible_residue("build_system: no admissible point mod " + std::to_string(p));
  }

  FormSystem sys;
  sys.forms = std::move(forms);
  sys.D = D;
  sys.abs_D = numutil::abs128(D);
  sys.strict_mode = strict_mode;
  sys.d_primes = std::move(primes_acc);
  auto [z1, m1] = numutil::crt(cong1);
  auto [z2, m2] = numutil::crt(cong2);
  (void)m1;
  (void)m2;
  sys.z = {static_cast<i128>(z1), static_cast<i128>(z2)};

  for (const QuadraticForm& q : sys.forms) {
    u128 val = numutil::abs128(eval(q, sys.z.first, sys.z.second));
    if (numutil::gcd_u128(val, sys.abs_D) != 1)
      throw error("build_system: internal error, z fails the coprimality check");
  }
  return sys;
}

}  // namespace formsieve::forms
