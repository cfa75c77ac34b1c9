#pragma once

// Exact integer arithmetic shared by every other component: gcd/CRT,
// Jacobi symbols, deterministic primality, 128-bit factorization, and
// the arithmetic functions mu/phi/nu/d derived from factorizations.

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace formsieve {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128;
using u128 = unsigned __int128;

/// Base class for all library errors.
class error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class overflow_error : public error {
  using error::error;
};

class cap_exceeded : public error {
  using error::error;
};

/// Violated precondition (bad modulus, zero input, ...).
class domain_error : public error {
  using error::error;
};

namespace numutil {

inline constexpr u128 abs128(i128 x) {
  return x < 0 ? static_cast<u128>(-(x + 1)) + 1 : static_cast<u128>(x);
}

inline std::string to_string(u128 n) {
  if (n == 0) return "0";
  std::string s;
  while (n > 0) {
    s.push_back(static_cast<char>('0' + static_cast<unsigned>(n % 10)));
    n /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

inline std::string to_string(i128 n) {
  return n < 0 ? "-" + to_string(abs128(n)) : to_string(static_cast<u128>(n));
}

/// Parses a decimal string into u128; throws on junk or overflow.
inline u128 parse_u128(const std::string& s) {
  if (s.empty()) throw domain_error("parse_u128: empty string");
  u128 v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') throw domain_error("parse_u128: non-digit in \"" + s + "\"");
    u128 next = v * 10 + static_cast<unsigned>(ch - '0');
    if (next / 10 != v) throw overflow_error("parse_u128: value too large");
    v = next;
  }
  return v;
}

inline u128 gcd_u128(u128 a, u128 b) {
  while (b != 0) {
    u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline u64 gcd_u64(u64 a, u64 b) {
  while (b != 0) {
    u64 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

/// gcd of the absolute values; gcd of an all-zero sequence is 0.
inline u128 gcd_many(const std::vector<i128>& values) {
  if (values.empty()) throw domain_error("gcd_many: empty sequence");
  u128 g = 0;
  for (i128 v : values) g = gcd_u128(g, abs128(v));
  return g;
}

inline u128 gcd_many(std::initializer_list<i128> values) {
  return gcd_many(std::vector<i128>(values));
}

inline u128 lcm_u128(u128 a, u128 b) {
  if (a == 0 || b == 0) return 0;
  u128 g = gcd_u128(a, b);
  u128 q = a / g;
  u128 r = q * b;
  if (r / b != q) throw overflow_error("lcm_u128: overflow");
  return r;
}

/// Extended gcd: returns g = gcd(|a|,|b|) and x, y with a*x + b*y = g.
struct ExtGcd {
  i128 g, x, y;
};

inline ExtGcd ext_gcd(i128 a, i128 b) {
  i128 old_r = a, r = b;
  i128 old_s = 1, s = 0;
  i128 old_t = 0, t = 1;
  while (r != 0) {
    i128 q = old_r / r;
    i128 tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
    tmp = old_t - q * t;
    old_t = t;
    t = tmp;
  }
  if (old_r < 0) {
    old_r = -old_r;
    old_s = -old_s;
    old_t = -old_t;
  }
  return {old_r, old_s, old_t};
}

/// Inverse of a modulo m; throws if gcd(a, m) != 1.
inline u128 mod_inverse(i128 a, u128 m) {
  if (m == 0) throw domain_error("mod_inverse: zero modulus");
  ExtGcd e = ext_gcd(a, static_cast<i128>(m));
  if (e.g != 1) throw domain_error("mod_inverse: not invertible");
  i128 x = e.x % static_cast<i128>(m);
  if (x < 0) x += static_cast<i128>(m);
  return static_cast<u128>(x);
}

inline u64 mulmod_u64(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<u128>(a) * b % m);
}

inline u64 powmod_u64(u64 base, u64 exp, u64 m) {
  u64 r = m == 1 ? 0 : 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) r = mulmod_u64(r, base, m);
    base = mulmod_u64(base, base, m);
    exp >>= 1;
  }
  return r;
}

// 128x128 mod 128 needs a 256-bit intermediate; shift-add keeps it exact.
inline u128 mulmod_u128(u128 a, u128 b, u128 m) {
  a %= m;
  b %= m;
  if (a == 0 || b == 0) return 0;
  if (a <= ~u128{0} / b) return a * b % m;
  u128 r = 0;
  while (b > 0) {
    if (b & 1) {
      r += a;
      if (r >= m) r -= m;
    }
    b >>= 1;
    if (b > 0) {
      a <<= 1;
      if (a >= m) a -= m;
    }
  }
  return r;
}

inline u128 powmod_u128(u128 base, u128 exp, u128 m) {
  u128 r = m == 1 ? 0 : 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) r = mulmod_u128(r, base, m);
    base = mulmod_u128(base, base, m);
    exp >>= 1;
  }
  return r;
}

/// Jacobi symbol (a/n) for odd n >= 1; equals the Legendre symbol for prime n.
inline int jacobi(i128 a, u128 n) {
  if (n == 0 || (n & 1) == 0)
    throw domain_error("jacobi: modulus must be odd and positive");
  i128 nn = static_cast<i128>(n);
  a %= nn;
  if (a < 0) a += nn;
  u128 ua = static_cast<u128>(a);
  u128 un = n;
  int result = 1;
  while (ua != 0) {
    while ((ua & 1) == 0) {
      ua >>= 1;
      u128 r = un & 7;
      if (r == 3 || r == 5) result = -result;
    }
    std::swap(ua, un);
    if ((ua & 3) == 3 && (un & 3) == 3) result = -result;
    ua %= un;
  }
  return un == 1 ? result : 0;
}

namespace detail {

inline bool miller_rabin_u64(u64 n, u64 witness) {
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  u64 x = powmod_u64(witness % n, d, n);
  if (x == 1 || x == n - 1) return true;
  for (int i = 1; i < s; ++i) {
    x = mulmod_u64(x, x, n);
    if (x == n - 1) return true;
  }
  return false;
}

inline bool miller_rabin_u128(u128 n, u128 witness) {
  u128 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  u128 x = powmod_u128(witness % n, d, n);
  if (x == 1 || x == n - 1) return true;
  for (int i = 1; i < s; ++i) {
    x = mulmod_u128(x, x, n);
    if (x == n - 1) return true;
  }
  return false;
}

}  // namespace detail

/// Deterministic for all n < 2^64 (fixed witness set).
inline bool is_prime_u64(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n == p) return true;
    if (n % p == 0) return false;
  }
  for (u64 w : {2ull, 325ull, 9375ull, 28178ull, 450775ull, 9780504ull, 1795265022ull}) {
    if (!detail::miller_rabin_u64(n, w)) return false;
  }
  return true;
}

/// Deterministic below 2^64; above, Miller-Rabin with a fixed prime witness set.
inline bool is_prime(u128 n) {
  if (n <= ~u64{0}) return is_prime_u64(static_cast<u64>(n));
  if ((n & 1) == 0) return false;
  for (u128 w : {2u, 3u, 5u, 7u, 11u, 13u, 17u, 19u, 23u, 29u, 31u, 37u, 41u, 43u, 47u, 53u}) {
    if (n % w == 0) return n == w;
    if (!detail::miller_rabin_u128(n, w)) return false;
  }
  return true;
}

/// Complete factorization of a value representable in 128 bits.
struct PrimeFactorization {
  struct Entry {
    u128 prime;
    unsigned exponent;
  };
  std::vector<Entry> factors;  // primes strictly increasing

  u128 value() const {
    u128 v = 1;
    for (const Entry& e : factors)
      for (unsigned i = 0; i < e.exponent; ++i) v *= e.prime;
    return v;
  }
};

namespace detail {

inline u128 pollard_rho_u128(u128 n) {
  // Brent's variant; retried with a new increment when a cycle yields n.
  for (u128 c = 1;; ++c) {
    u128 x = 2, y = 2, d = 1;
    u128 saved = 1;
    int power = 1, lam = 1;
    auto advance = [&](u128 v) { return (mulmod_u128(v, v, n) + c) % n; };
    while (d == 1) {
      if (power == lam) {
        x = y;
        power *= 2;
        lam = 0;
      }
      y = advance(y);
      ++lam;
      u128 diff = x > y ? x - y : y - x;
      if (diff == 0) break;
      saved = mulmod_u128(saved, diff, n);
      if (lam % 64 == 0) {
        d = gcd_u128(saved, n);
        saved = 1;
      }
    }
    if (d == 1) d = gcd_u128(saved, n);
    if (d != 1 && d != n) return d;
    // cycle failure: retry with the next polynomial increment
  }
}

inline void factor_recursive(u128 n, std::vector<u128>& out) {
  if (n == 1) return;
  if (is_prime(n)) {
    out.push_back(n);
    return;
  }
  u128 d = pollard_rho_u128(n);
  factor_recursive(d, out);
  factor_recursive(n / d, out);
}

}  // namespace detail

inline PrimeFactorization factorize(u128 n) {
  if (n == 0) throw domain_error("factorize: input must be positive");
  PrimeFactorization pf;
  // Trial division first; Pollard rho only sees hard cofactors.
  for (u64 p = 2; p <= 10000 && static_cast<u128>(p) * p <= n; p = (p == 2 ? 3 : p + 2)) {
    if (n % p == 0) {
      unsigned e = 0;
      while (n % p == 0) {
        n /= p;
        ++e;
      }
      pf.factors.push_back({p, e});
    }
  }
  if (n > 1) {
    std::vector<u128> rest;
    detail::factor_recursive(n, rest);
    std::sort(rest.begin(), rest.end());
    for (std::size_t i = 0; i < rest.size();) {
      std::size_t j = i;
      while (j < rest.size() && rest[j] == rest[i]) ++j;
      pf.factors.push_back({rest[i], static_cast<unsigned>(j - i)});
      i = j;
    }
  }
  return pf;
}

/// Omega(n): prime factors counted with multiplicity. n is a P_r iff
/// omega_big(n) <= r.
inline unsigned omega_big(u128 n) {
  unsigned total = 0;
  for (const auto& e : factorize(n).factors) total += e.exponent;
  return total;
}

inline int mobius(const PrimeFactorization& pf) {
  for (const auto& e : pf.factors)
    if (e.exponent > 1) return 0;
  return pf.factors.size() % 2 == 0 ? 1 : -1;
}

inline int mobius(u128 n) { return mobius(factorize(n)); }

inline u128 euler_phi(const PrimeFactorization& pf) {
  u128 phi = 1;
  for (const auto& e : pf.factors) {
    phi *= e.prime - 1;
    for (unsigned i = 1; i < e.exponent; ++i) phi *= e.prime;
  }
  return phi;
}

inline u128 euler_phi(u128 n) { return euler_phi(factorize(n)); }

/// nu(n): number of distinct prime factors.
inline unsigned nu_distinct(u128 n) {
  return static_cast<unsigned>(factorize(n).factors.size());
}

/// d(n): number of positive divisors.
inline u128 divisor_count(const PrimeFactorization& pf) {
  u128 d = 1;
  for (const auto& e : pf.factors) d *= e.exponent + 1;
  return d;
}

inline bool is_squarefree(u128 n) {
  for (const auto& e : factorize(n).factors)
    if (e.exponent > 1) return false;
  return true;
}

/// All positive divisors, sorted ascending.
inline std::vector<u64> divisors(u64 n) {
  PrimeFactorization pf = factorize(n);
  std::vector<u64> divs{1};
  for (const auto& e : pf.factors) {
    std::size_t base = divs.size();
    u64 pk = 1;
    for (unsigned i = 0; i < e.exponent; ++i) {
      pk *= static_cast<u64>(e.prime);
      for (std::size_t j = 0; j < base; ++j) divs.push_back(divs[j] * pk);
    }
  }
  std::sort(divs.begin(), divs.end());
  return divs;
}

/// Combines congruences x = r_i (mod m_i) with pairwise coprime moduli.
/// Returns (residue, product modulus).
inline std::pair<u128, u128> crt(const std::vector<std::pair<i128, u128>>& congruences) {
  if (congruences.empty()) throw domain_error("crt: empty input");
  u128 mod = congruences[0].second;
  if (mod == 0) throw domain_error("crt: zero modulus");
  i128 r0 = congruences[0].first % static_cast<i128>(mod);
  if (r0 < 0) r0 += static_cast<i128>(mod);
  u128 res = static_cast<u128>(r0);
  for (std::size_t i = 1; i < congruences.size(); ++i) {
    u128 m2 = congruences[i].second;
    if (m2 == 0) throw domain_error("crt: zero modulus");
    if (gcd_u128(mod, m2) != 1) throw domain_error("crt: moduli not pairwise coprime");
    i128 r2 = congruences[i].first % static_cast<i128>(m2);
    if (r2 < 0) r2 += static_cast<i128>(m2);
    // x = res + mod * k, k = (r2 - res) * mod^{-1} (mod m2)
    u128 inv = mod_inverse(static_cast<i128>(mod % m2), m2);
    u128 delta = (static_cast<u128>(r2) + m2 - res % m2) % m2;
    u128 k = mulmod_u128(delta, inv, m2);
    u128 combined = mod * m2;
    if (combined / m2 != mod) throw overflow_error("crt: modulus product overflow");
    res = res + mod * k;
    mod = combined;
  }
  return {res, mod};
}

/// Primes below limit via Eratosthenes (iteration support only; the
/// arithmetic functions above never consult sieve tables).
inline std::vector<u64> primes_below(u64 limit) {
  std::vector<u64> ps;
  if (limit <= 2) return ps;
  std::vector<bool> composite(limit, false);
  for (u64 i = 2; i < limit; ++i) {
    if (!composite[i]) {
      ps.push_back(i);
      for (u64 j = i * i; j < limit; j += i) composite[j] = true;
    }
  }
  return ps;
}

inline u128 isqrt_u128(u128 n) {
  if (n == 0) return 0;
  u128 x = n, y = (x + 1) / 2;
  while (y < x) {
    x = y;
    y = (x + n / x) / 2;
  }
  return x;
}

inline bool is_perfect_square(i128 n) {
  if (n < 0) return false;
  u128 r = isqrt_u128(static_cast<u128>(n));
  return r * r == static_cast<u128>(n);
}

}  // namespace numutil
}  // namespace formsieve
