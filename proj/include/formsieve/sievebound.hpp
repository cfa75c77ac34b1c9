#pragma once

// Diamond-Halberstam-Richert sieve functions sigma_kappa, F_kappa, f_kappa,
// the almost-prime lower-bound integral, its minimization over (u, v), and
// the sifted-density product.
//
// The delay-differential system:
//   sigma(u) = (e^{-gamma} u / 2)^kappa / kappa!          for 0 < u <= 2,
//   (u^{-kappa} sigma(u))' = -kappa u^{-kappa-1} sigma(u-2)   for u > 2,
//   F(u) = 1 / sigma(u)   for u <= alpha_kappa,
//   f(u) = 0              for u <= beta_kappa,
//   (u^kappa F(u))' = kappa u^{kappa-1} f(u-1),
//   (u^kappa f(u))' = kappa u^{kappa-1} F(u-1).
//
// Integration is classical RK4 on a piecewise-uniform grid whose segment
// boundaries sit on every kink of the solution (integers, alpha_kappa + m,
// beta_kappa + m), with cubic interpolation of delayed values that never
// crosses a segment boundary. That keeps clean fourth-order convergence.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "formsieve/localdensity.hpp"

namespace formsieve::sievebound {

class step_too_coarse : public error {
  using error::error;
};
class inconsistent_params : public error {
  using error::error;
};
class constraint_violated : public error {
  using error::error;
};
class f_out_of_range : public error {
  using error::error;
};
class no_feasible_point : public error {
  using error::error;
};

inline constexpr double kEulerGamma = 0.5772156649015329;
inline constexpr double kDefaultStep = 1e-3;
inline constexpr double kMaxStep = 1e-2;

struct SieveParams {
  unsigned kappa = 2;
  double alpha_kappa = 0.0;
  double beta_kappa = 0.0;
  double alpha = 1.0;  // level exponent
  double mu = 0.0;     // size exponent

  void validate() const {
    if (kappa == 0) throw domain_error("SieveParams: kappa must be positive");
    if (!(beta_kappa > 2.0))
      throw inconsistent_params("SieveParams: beta_kappa must exceed 2");
    if (!(alpha_kappa > beta_kappa))
      throw inconsistent_params("SieveParams: alpha_kappa must exceed beta_kappa");
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw domain_error("SieveParams: alpha must lie in (0, 1]");
    if (!(mu > 0.0)) throw domain_error("SieveParams: mu must be positive");
  }
};

/// Matching constants alpha_kappa, beta_kappa for kappa = 2..10.
struct DhrConstants {
  unsigned kappa;
  double alpha_kappa;
  double beta_kappa;
};

inline constexpr DhrConstants kDhrTable[] = {
    {2, 5.3577, 4.2644},  {3, 8.3719, 6.6408},   {4, 11.5317, 9.0722},
    {5, 14.7735, 11.5347}, {6, 18.0679, 14.0146}, {7, 21.3989, 16.5042},
    {8, 24.7571, 18.9988}, {9, 28.1326, 21.4955}, {10, 31.5320, 23.9924},
};

/// Parameters for the quadratic-form application: kappa = mu = g, alpha = 1.
inline SieveParams standard_params(unsigned g) {
  for (const DhrConstants& e : kDhrTable)
    if (e.kappa == g)
      return SieveParams{g, e.alpha_kappa, e.beta_kappa, 1.0, static_cast<double>(g)};
  throw domain_error("standard_params: tabulated constants cover kappa = 2..10 only");
}

inline double sigma_initial(unsigned kappa, double u) {
  double fact = 1.0;
  for (unsigned i = 2; i <= kappa; ++i) fact *= i;
  return std::pow(std::exp(-kEulerGamma) * u / 2.0, static_cast<double>(kappa)) / fact;
}

namespace detail {

/// Piecewise-uniform grid: one uniform block per segment between
/// breakpoints, at least four nodes per segment. Interpolation stencils
/// stay inside one segment.
class SegmentedGrid {
 public:
  SegmentedGrid() = default;

  SegmentedGrid(double lo, double hi, std::vector<double> breakpoints, double step) {
    breakpoints.push_back(lo);
    breakpoints.push_back(hi);
    std::sort(breakpoints.begin(), breakpoints.end());
    std::vector<double> bounds;
    for (double b : breakpoints) {
      if (b < lo - 1e-12 || b > hi + 1e-12) continue;
      if (bounds.empty() || b - bounds.back() > 1e-9) bounds.push_back(b);
    }
    nodes_.push_back(bounds.front());
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
      double a = bounds[k], b = bounds[k + 1];
      std::size_t n = std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil((b - a) / step)));
      seg_first_.push_back(nodes_.size() - 1);
      seg_lo_.push_back(a);
      seg_h_.push_back((b - a) / static_cast<double>(n));
      seg_n_.push_back(n);
      for (std::size_t j = 1; j <= n; ++j)
        nodes_.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(n));
    }
  }

  std::size_t size() const { return nodes_.size(); }
  double node(std::size_t i) const { return nodes_[i]; }
  double lo() const { return nodes_.front(); }
  double hi() const { return nodes_.back(); }

  /// Cubic Lagrange interpolation of tabulated values, stencil clipped to
  /// the segment containing u.
  double interpolate(const std::vector<double>& values, double u) const {
    std::size_t k = find_segment(u);
    double t = (u - seg_lo_[k]) / seg_h_[k];
    std::size_t n = seg_n_[k];
    long i0 = static_cast<long>(std::floor(t)) - 1;
    i0 = std::clamp<long>(i0, 0, static_cast<long>(n) - 3);
    double s = t - static_cast<double>(i0);
    const double* y = values.data() + seg_first_[k] + i0;
    double s1 = s - 1.0, s2 = s - 2.0, s3 = s - 3.0;
    return -y[0] * s1 * s2 * s3 / 6.0 + y[1] * s * s2 * s3 / 2.0 -
           y[2] * s * s1 * s3 / 2.0 + y[3] * s * s1 * s2 / 6.0;
  }

 private:
  std::size_t find_segment(double u) const {
    std::size_t lo = 0, hi = seg_lo_.size();
    while (lo + 1 < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (seg_lo_[mid] <= u)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  std::vector<double> nodes_;
  std::vector<std::size_t> seg_first_, seg_n_;
  std::vector<double> seg_lo_, seg_h_;
};

inline double rk4_step(const std::function<double(double, double)>& deriv, double u0, double y0,
                       double h) {
  double k1 = deriv(u0, y0);
  double k2 = deriv(u0 + h / 2, y0 + h / 2 * k1);
  double k3 = deriv(u0 + h / 2, y0 + h / 2 * k2);
  double k4 = deriv(u0 + h, y0 + h * k3);
  return y0 + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace detail

/// Sampled sigma_kappa, F_kappa, f_kappa on [2, u_max] plus the analytic
/// pieces below the matching points.
class SieveFunctionTable {
 public:
  SieveFunctionTable(SieveParams params, double u_max, double step)
      : params_(params), step_(step) {
    params_.validate();
    if (step > kMaxStep) throw step_too_coarse("SieveFunctionTable: step exceeds 1e-2");
    if (step <= 0) throw domain_error("SieveFunctionTable: step must be positive");
    if (u_max < params_.alpha_kappa + 2)
      throw domain_error("SieveFunctionTable: u_max below alpha_kappa + 2");

    std::vector<double> bps;
    for (double b = 2.0; b <= u_max; b += 1.0) bps.push_back(b);
    for (double b = params_.alpha_kappa; b <= u_max; b += 1.0) bps.push_back(b);
    for (double b = params_.beta_kappa; b <= u_max; b += 1.0) bps.push_back(b);
    grid_ = detail::SegmentedGrid(2.0, u_max, std::move(bps), step);

    solve_sigma_table();
    solve_Ff_tables();
  }

  const SieveParams& params() const { return params_; }
  double u_max() const { return grid_.hi(); }
  double step() const { return step_; }

  double sigma(double u) const {
    if (u <= 0) throw domain_error("sigma: argument must be positive");
    if (u <= 2.0) return sigma_initial(params_.kappa, u);
    if (u > grid_.hi() + 1e-12) throw f_out_of_range("sigma: beyond tabulated domain");
    return grid_.interpolate(sigma_, std::min(u, grid_.hi()));
  }

  double F(double u) const {
    if (u <= 0) throw domain_error("F: argument must be positive");
    if (u <= 2.0) return 1.0 / sigma_initial(params_.kappa, u);
    if (u > grid_.hi() + 1e-12) throw f_out_of_range("F: beyond tabulated domain");
    return grid_.interpolate(F_, std::min(u, grid_.hi()));
  }

  double f(double u) const {
    if (u <= 0) throw domain_error("f: argument must be positive");
    if (u <= params_.beta_kappa) return 0.0;
    if (u > grid_.hi() + 1e-12) throw f_out_of_range("f: beyond tabulated domain");
    return grid_.interpolate(f_, std::min(u, grid_.hi()));
  }

  /// Kink locations (segment boundaries); quadrature splits on these.
  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (double x = 2.0; x <= grid_.hi(); x += 1.0) b.push_back(x);
    for (double x = params_.alpha_kappa; x <= grid_.hi(); x += 1.0) b.push_back(x);
    for (double x = params_.beta_kappa; x <= grid_.hi(); x += 1.0) b.push_back(x);
    std::sort(b.begin(), b.end());
    return b;
  }

 private:
  void solve_sigma_table() {
    const unsigned kappa = params_.kappa;
    sigma_.resize(grid_.size());
    sigma_[0] = sigma_initial(kappa, 2.0);
    // delayed argument u - 2 always lies >= 2 segments behind the front
    auto delayed = [&](double u) {
      if (u <= 2.0) return sigma_initial(kappa, u);
      return grid_.interpolate(sigma_, u);
    };
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
      double u0 = grid_.node(i), u1 = grid_.node(i + 1);
      auto deriv = [&](double u, double y) { return (kappa / u) * (y - delayed(u - 2.0)); };
      sigma_[i + 1] = detail::rk4_step(deriv, u0, sigma_[i], u1 - u0);
    }
  }

  void solve_Ff_tables() {
    const unsigned kappa = params_.kappa;
    const double ak = params_.alpha_kappa, bk = params_.beta_kappa;
    F_.assign(grid_.size(), 0.0);
    f_.assign(grid_.size(), 0.0);

    auto F_delayed = [&](double u) {
      if (u <= 2.0) return 1.0 / sigma_initial(kappa, u);
      return grid_.interpolate(F_, u);
    };
    auto f_delayed = [&](double u) {
      if (u <= bk) return 0.0;
      return grid_.interpolate(f_, u);
    };

    for (std::size_t i = 0; i < grid_.size(); ++i) {
      double u = grid_.node(i);
      if (u <= ak + 1e-12) {
        F_[i] = 1.0 / sigma_[i];
      } else {
        double u0 = grid_.node(i - 1);
        auto deriv = [&](double uu, double y) { return (kappa / uu) * (f_delayed(uu - 1.0) - y); };
        F_[i] = detail::rk4_step(deriv, u0, F_[i - 1], u - u0);
      }
      if (u <= bk + 1e-12) {
        f_[i] = 0.0;
      } else {
        double u0 = grid_.node(i - 1);
        auto deriv = [&](double uu, double y) { return (kappa / uu) * (F_delayed(uu - 1.0) - y); };
        f_[i] = detail::rk4_step(deriv, u0, f_[i - 1], u - u0);
      }
    }

    // A wrong (alpha_kappa, beta_kappa) pairing drives f far outside [0,1].
    // The tabulated constants are truncated at four decimals, which shifts
    // the common limit of F and f away from 1 by up to ~1e-3; allow that.
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (f_[i] < -1e-6 || f_[i] > 1.0 + 5e-3)
        throw inconsistent_params("solve_Ff: f leaves [0,1]; check alpha_kappa/beta_kappa");
    }
  }

  SieveParams params_;
  double step_;
  detail::SegmentedGrid grid_;
  std::vector<double> sigma_, F_, f_;
};

/// sigma_kappa alone (the auxiliary function; F = 1/sigma below alpha_kappa).
inline SieveFunctionTable solve_sigma(unsigned kappa, double u_max = 62.0,
                                      double step = kDefaultStep) {
  // beta/alpha only gate the F/f marching; defaults keep sigma valid for
  // any kappa covered by the constants table, else synthetic values work.
  SieveParams p;
  p.kappa = kappa;
  p.alpha_kappa = 6.0;
  p.beta_kappa = 4.0;
  p.mu = kappa;
  for (const DhrConstants& e : kDhrTable)
    if (e.kappa == kappa) {
      p.alpha_kappa = e.alpha_kappa;
      p.beta_kappa = e.beta_kappa;
    }
  return SieveFunctionTable(p, std::max(u_max, p.alpha_kappa + 2), step);
}

inline SieveFunctionTable solve_Ff(const SieveParams& params, double u_max = 62.0,
                                   double step = kDefaultStep) {
  return SieveFunctionTable(params, u_max, step);
}

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& g, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
  double m = (a + b) / 2;
  double lm = (a + m) / 2, rm = (m + b) / 2;
  double flm = g(lm), frm = g(rm);
  double left = (m - a) / 6 * (fa + 4 * flm + fm);
  double right = (b - m) / 6 * (fm + 4 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
  return adaptive_simpson(g, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(g, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& g, double a, double b,
                        double rel_tol) {
  if (b <= a) return 0.0;
  double fa = g(a), fb = g(b), fm = g((a + b) / 2);
  double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  double scale = std::max(std::abs(whole), 1e-12);
  return adaptive_simpson(g, a, b, fa, fm, fb, whole, rel_tol * scale, 48);
}

}  // namespace detail

/// Right-hand side of the almost-prime lower bound:
///   alpha mu u - 1 + kappa / f(alpha v) *
///     integral_1^{v/u} F(alpha v - s) (1 - (u/v) s) ds / s.
inline double r_bound(const SieveParams& params, double u, double v,
                      const SieveFunctionTable& table, double rel_tol = 1e-8) {
  params.validate();
  if (!(1.0 / params.alpha < u && u < v))
    throw constraint_violated("r_bound: need 1/alpha < u < v");
  if (!(params.beta_kappa < params.alpha * v))
    throw constraint_violated("r_bound: need beta_kappa < alpha v");
  const double av = params.alpha * v;
  const double fv = table.f(av);
  if (fv <= 0) throw constraint_violated("r_bound: f(alpha v) vanishes");

  const double s_hi = v / u;
  auto integrand = [&](double s) { return table.F(av - s) * (1.0 - (u / v) * s) / s; };

  // split at s where av - s crosses a kink of F
  std::vector<double> cuts{1.0};
  for (double bp : table.breakpoints()) {
    double s = av - bp;
    if (s > 1.0 + 1e-12 && s < s_hi - 1e-12) cuts.push_back(s);
  }
  cuts.push_back(s_hi);
  std::sort(cuts.begin(), cuts.end());

  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    integral += detail::integrate(integrand, cuts[i], cuts[i + 1], rel_tol);

  return params.alpha * params.mu * u - 1.0 +
         static_cast<double>(params.kappa) / fv * integral;
}

struct RMinimum {
  unsigned r_M = 0;
  double u_star = 0.0;
  double v_star = 0.0;
  double bound = 0.0;
  bool near_integer_warning = false;
};

/// Minimizes r_bound over the feasible (u, v) rectangle: coarse 0.25 grid on
/// (1/alpha, grid_hi], then Nelder-Mead refinement. r_M is the smallest
/// integer strictly exceeding the infimum.
inline RMinimum minimize_r(const SieveParams& params, const SieveFunctionTable& table,
                           double grid_hi = 60.0, double grid_step = 0.25) {
  params.validate();
  const double u_lo = 1.0 / params.alpha;
  const double av_cap = table.u_max() - 1e-9;

  auto evaluate = [&](double u, double v, double tol) {
    if (!(u > u_lo && v > u && params.alpha * v > params.beta_kappa &&
          params.alpha * v <= av_cap))
      return std::numeric_limits<double>::infinity();
    return r_bound(params, u, v, table, tol);
  };

  double best = std::numeric_limits<double>::infinity();
  double bu = 0, bv = 0;
  for (double u = std::ceil((u_lo + grid_step) / grid_step) * grid_step; u <= grid_hi;
       u += grid_step) {
    for (double v = u + grid_step; v <= grid_hi; v += grid_step) {
      double b = evaluate(u, v, 1e-5);
      if (b < best) {
        best = b;
        bu = u;
        bv = v;
      }
    }
  }
  if (!std::isfinite(best)) throw no_feasible_point("minimize_r: empty feasible region");

  // Nelder-Mead on (u, v) from the best grid point
  struct Vertex {
    double u, v, val;
  };
  auto make = [&](double u, double v) { return Vertex{u, v, evaluate(u, v, 1e-8)}; };
  std::array<Vertex, 3> simplex{make(bu, bv), make(bu + grid_step / 2, bv),
                                make(bu, bv + grid_step / 2)};
  auto by_val = [](const Vertex& a, const Vertex& b) { return a.val < b.val; };
  for (int iter = 0; iter < 400; ++iter) {
    std::sort(simplex.begin(), simplex.end(), by_val);
    double diam = std::max({std::abs(simplex[0].u - simplex[2].u),
                            std::abs(simplex[0].v - simplex[2].v),
                            std::abs(simplex[1].u - simplex[2].u)});
    if (diam < 1e-7) break;
    double cu = (simplex[0].u + simplex[1].u) / 2;
    double cv = (simplex[0].v + simplex[1].v) / 2;
    Vertex refl = make(cu + (cu - simplex[2].u), cv + (cv - simplex[2].v));
    if (refl.val < simplex[0].val) {
      Vertex exp = make(cu + 2 * (cu - simplex[2].u), cv + 2 * (cv - simplex[2].v));
      simplex[2] = exp.val < refl.val ? exp : refl;
    } else if (refl.val < simplex[1].val) {
      simplex[2] = refl;
    } else {
      Vertex contr = make(cu + 0.5 * (simplex[2].u - cu), cv + 0.5 * (simplex[2].v - cv));
      if (contr.val < simplex[2].val) {
        simplex[2] = contr;
      } else {
        for (int k = 1; k < 3; ++k)
          simplex[k] = make((simplex[k].u + simplex[0].u) / 2,
                            (simplex[k].v + simplex[0].v) / 2);
      }
    }
  }
  std::sort(simplex.begin(), simplex.end(), by_val);

  RMinimum out;
  out.u_star = simplex[0].u;
  out.v_star = simplex[0].v;
  out.bound = simplex[0].val;
  out.r_M = static_cast<unsigned>(std::floor(out.bound)) + 1;
  out.near_integer_warning = std::abs(out.bound - std::round(out.bound)) < 1e-4;
  return out;
}

/// prod over primes p < X^gamma of (1 - omega(p)/p), with exact rational
/// accumulation folded into a double whenever the fraction grows too wide.
inline double density_product(const forms::FormSystem& sys, u64 X, double gamma_exp,
                              u64 prime_cap = 10000000ull) {
  if (gamma_exp <= 0.0) throw domain_error("density_product: gamma must be positive");
  double limit_d = std::pow(static_cast<double>(X), gamma_exp);
  if (limit_d > static_cast<double>(prime_cap))
    throw cap_exceeded("density_product: X^gamma exceeds the prime cap");
  u64 limit = static_cast<u64>(std::ceil(limit_d));

  const i128 fold_bound = static_cast<i128>(1) << 96;
  double folded = 1.0;
  Rational acc(1);
  for (u64 p : numutil::primes_below(limit)) {
    Rational factor = Rational(1) - localdensity::omega_closed(sys, p) / Rational(p);
    acc = acc * factor;
    if (numutil::abs128(acc.num) > static_cast<u128>(fold_bound) ||
        acc.den > fold_bound) {
      folded *= acc.to_double();
      acc = Rational(1);
    }
  }
  return folded * acc.to_double();
}

struct TableRow {
  unsigned kappa;
  double alpha_kappa, beta_kappa, u_star, v_star, bound;
  unsigned r_M;
  bool warn;
};

/// Solves and minimizes for every tabulated kappa.
inline std::vector<TableRow> reproduce_r_table(double step = kDefaultStep,
                                               double u_max = 62.0) {
  std::vector<TableRow> rows;
  for (const DhrConstants& e : kDhrTable) {
    SieveParams p = standard_params(e.kappa);
    SieveFunctionTable table = solve_Ff(p, u_max, step);
    RMinimum m = minimize_r(p, table);
    rows.push_back({e.kappa, e.alpha_kappa, e.beta_kappa, m.u_star, m.v_star, m.bound, m.r_M,
                    m.near_integer_warning});
  }
  return rows;
}

inline std::string r_table_csv(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "kappa,alpha_kappa,beta_kappa,u_star,v_star,bound,r_M\n";
  out.precision(10);
  for (const TableRow& r : rows) {
    out << r.kappa << "," << r.alpha_kappa << "," << r.beta_kappa << "," << r.u_star << ","
        << r.v_star << "," << r.bound << "," << r.r_M;
    if (r.warn) out << ",WARN_NEAR_INTEGER";
    out << "\n";
  }
  return out.str();
}

}  // namespace formsieve::sievebound
