#pragma once

// Exact rational arithmetic over 128-bit integers. Densities and the
// sifting function omega are always exact; floating point only appears
// at reporting boundaries.

#include "formsieve/numutil.hpp"

namespace formsieve {

struct Rational {
  i128 num = 0;
  i128 den = 1;  // always > 0, gcd(num, den) == 1

  Rational() = default;
  Rational(i128 n) : num(n) {}
  Rational(i128 n, i128 d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw domain_error("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    u128 g = numutil::gcd_u128(numutil::abs128(num), static_cast<u128>(den));
    if (g > 1) {
      num /= static_cast<i128>(g);
      den /= static_cast<i128>(g);
    }
  }

  static i128 checked_mul(i128 a, i128 b) {
    i128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw overflow_error("Rational: overflow");
    return r;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    i128 g = static_cast<i128>(numutil::gcd_u128(static_cast<u128>(a.den), static_cast<u128>(b.den)));
    i128 da = a.den / g;
    i128 db = b.den / g;
    i128 n;
    if (__builtin_add_overflow(checked_mul(a.num, db), checked_mul(b.num, da), &n))
      throw overflow_error("Rational: overflow");
    return Rational(n, checked_mul(checked_mul(da, g), db));
  }

  friend Rational operator-(const Rational& a, const Rational& b) { return a + Rational(-b.num, b.den); }
  friend Rational operator-(const Rational& a) { return Rational(-a.num, a.den); }

  friend Rational operator*(const Rational& a, const Rational& b) {
    // cross-reduce before multiplying to delay overflow
    Rational x(a.num, b.den);
    Rational y(b.num, a.den);
    return Rational(checked_mul(x.num, y.num), checked_mul(x.den, y.den));
  }

  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num == 0) throw domain_error("Rational: division by zero");
    return a * Rational(b.den, b.num);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) { return (a - b).num < 0; }
  friend bool operator<=(const Rational& a, const Rational& b) { return (a - b).num <= 0; }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  std::string str() const {
    if (den == 1) return numutil::to_string(num);
    return numutil::to_string(num) + "/" + numutil::to_string(den);
  }
};

}  // namespace formsieve
