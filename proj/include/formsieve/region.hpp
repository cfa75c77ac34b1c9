#pragma once

// Convex plane regions (disk, box, convex polygon) with exact membership
// tests for integer points, exact areas where the shape allows, and the
// boundary-length data the level-of-distribution diagnostics need.

#include <cmath>
#include <utility>
#include <vector>

#include "formsieve/rational.hpp"

namespace formsieve::lattice {

inline i128 rational_floor(const Rational& r) {
  if (r.num >= 0) return r.num / r.den;
  return -((-r.num + r.den - 1) / r.den);
}

inline i128 rational_ceil(const Rational& r) { return -rational_floor(-r); }

struct Region {
  enum class Kind { box, disk, polygon };

  Kind kind = Kind::box;
  // box
  Rational x_min, y_min, x_max, y_max;
  // disk
  Rational cx, cy, radius;
  // polygon (stored counterclockwise)
  std::vector<std::pair<Rational, Rational>> vertices;

  static Region box(Rational x0, Rational y0, Rational x1, Rational y1) {
    if (x1 <= x0 || y1 <= y0) throw domain_error("Region::box: empty box");
    Region r;
    r.kind = Kind::box;
    r.x_min = x0;
    r.y_min = y0;
    r.x_max = x1;
    r.y_max = y1;
    return r;
  }

  static Region disk(Rational cx, Rational cy, Rational radius) {
    if (radius.num <= 0) throw domain_error("Region::disk: radius must be positive");
    Region r;
    r.kind = Kind::disk;
    r.cx = cx;
    r.cy = cy;
    r.radius = radius;
    return r;
  }

  static Region polygon(std::vector<std::pair<Rational, Rational>> vs) {
    if (vs.size() < 3) throw domain_error("Region::polygon: need at least 3 vertices");
    Region r;
    r.kind = Kind::polygon;
    r.vertices = std::move(vs);
    Rational twice_area = r.polygon_twice_signed_area();
    if (twice_area.num == 0) throw domain_error("Region::polygon: degenerate polygon");
    if (twice_area.num < 0) std::reverse(r.vertices.begin(), r.vertices.end());
    // convexity: every cross product of consecutive edges must be >= 0
    const auto& v = r.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& a = v[i];
      const auto& b = v[(i + 1) % v.size()];
      const auto& c = v[(i + 2) % v.size()];
      Rational cross = (b.first - a.first) * (c.second - b.second) -
                       (b.second - a.second) * (c.first - b.first);
      if (cross.num < 0) throw domain_error("Region::polygon: not convex");
    }
    return r;
  }

  /// Closed-region membership of an integer point, decided exactly.
  bool contains(i128 x, i128 y) const {
    Rational rx(x), ry(y);
    switch (kind) {
      case Kind::box:
        return x_min <= rx && rx <= x_max && y_min <= ry && ry <= y_max;
      case Kind::disk: {
        Rational dx = rx - cx, dy = ry - cy;
        return dx * dx + dy * dy <= radius * radius;
      }
      case Kind::polygon: {
        for (std::size_t i = 0; i < vertices.size(); ++i) {
          const auto& a = vertices[i];
          const auto& b = vertices[(i + 1) % vertices.size()];
          Rational cross = (b.first - a.first) * (ry - a.second) -
                           (b.second - a.second) * (rx - a.first);
          if (cross.num < 0) return false;
        }
        return true;
      }
    }
    return false;
  }

  Region scaled(const Rational& t) const {
    if (t.num <= 0) throw domain_error("Region::scaled: scale must be positive");
    Region r = *this;
    switch (kind) {
      case Kind::box:
        r.x_min = x_min * t;
        r.y_min = y_min * t;
        r.x_max = x_max * t;
        r.y_max = y_max * t;
        break;
      case Kind::disk:
        r.cx = cx * t;
        r.cy = cy * t;
        r.radius = radius * t;
        break;
      case Kind::polygon:
        for (auto& v : r.vertices) {
          v.first = v.first * t;
          v.second = v.second * t;
        }
        break;
    }
    return r;
  }

  Region translated(const Rational& dx, const Rational& dy) const {
    Region r = *this;
    switch (kind) {
      case Kind::box:
        r.x_min = x_min + dx;
        r.y_min = y_min + dy;
        r.x_max = x_max + dx;
        r.y_max = y_max + dy;
        break;
      case Kind::disk:
        r.cx = cx + dx;
        r.cy = cy + dy;
        break;
      case Kind::polygon:
        for (auto& v : r.vertices) {
          v.first = v.first + dx;
          v.second = v.second + dy;
        }
        break;
    }
    return r;
  }

  /// Exact area; throws for disks (pi is not rational).
  Rational area_rational() const {
    switch (kind) {
      case Kind::box:
        return (x_max - x_min) * (y_max - y_min);
      case Kind::polygon:
        return polygon_twice_signed_area() / Rational(2);
      case Kind::disk:
        throw domain_error("Region: disk area is not rational");
    }
    throw domain_error("Region: unknown kind");
  }

  double area() const {
    if (kind == Kind::disk) {
      double r = radius.to_double();
      return M_PI * r * r;
    }
    return area_rational().to_double();
  }

  double boundary_length() const {
    switch (kind) {
      case Kind::box:
        return 2.0 * ((x_max - x_min).to_double() + (y_max - y_min).to_double());
      case Kind::disk:
        return 2.0 * M_PI * radius.to_double();
      case Kind::polygon: {
        double len = 0.0;
        for (std::size_t i = 0; i < vertices.size(); ++i) {
          const auto& a = vertices[i];
          const auto& b = vertices[(i + 1) % vertices.size()];
          double dx = (b.first - a.first).to_double();
          double dy = (b.second - a.second).to_double();
          len += std::hypot(dx, dy);
        }
        return len;
      }
    }
    return 0.0;
  }

  struct BBox {
    i128 x_lo, x_hi, y_lo, y_hi;

    u128 point_count() const {
      if (x_hi < x_lo || y_hi < y_lo) return 0;
      return static_cast<u128>(x_hi - x_lo + 1) * static_cast<u128>(y_hi - y_lo + 1);
    }
  };

  /// Smallest integer box containing the region.
  BBox bounding_box() const {
    switch (kind) {
      case Kind::box:
        return {rational_ceil(x_min), rational_floor(x_max), rational_ceil(y_min),
                rational_floor(y_max)};
      case Kind::disk:
        return {rational_ceil(cx - radius), rational_floor(cx + radius),
                rational_ceil(cy - radius), rational_floor(cy + radius)};
      case Kind::polygon: {
        Rational xlo = vertices[0].first, xhi = vertices[0].first;
        Rational ylo = vertices[0].second, yhi = vertices[0].second;
        for (const auto& v : vertices) {
          if (v.first < xlo) xlo = v.first;
          if (v.first > xhi) xhi = v.first;
          if (v.second < ylo) ylo = v.second;
          if (v.second > yhi) yhi = v.second;
        }
        return {rational_ceil(xlo), rational_floor(xhi), rational_ceil(ylo),
                rational_floor(yhi)};
      }
    }
    throw domain_error("Region: unknown kind");
  }

 private:
  Rational polygon_twice_signed_area() const {
    Rational s(0);
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      const auto& a = vertices[i];
      const auto& b = vertices[(i + 1) % vertices.size()];
      s = s + (a.first * b.second - b.first * a.second);
    }
    return s;
  }
};

}  // namespace formsieve::lattice
