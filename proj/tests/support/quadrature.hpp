#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace handtrack::testing {

// Adaptive Gauss-Kronrod (7/15) integration. The interval is first cut into `pieces`
// equal panels so narrow peaks cannot hide between the initial nodes; panels are then
// bisected until each one's error estimate is below its share of rel_tol * |total|.
class Quadrature {
 public:
  explicit Quadrature(double rel_tol = 1e-11, int pieces = 24, int max_depth = 40)
      : rel_tol_(rel_tol), pieces_(pieces), max_depth_(max_depth) {}

  template <class F>
  double operator()(F&& f, double a, double b) const {
    const double h = (b - a) / pieces_;
    double rough = 0.0;
    std::vector<double> panel(pieces_);
    std::vector<double> err(pieces_);
    for (int i = 0; i < pieces_; ++i) {
      panel[i] = kronrod(f, a + i * h, a + (i + 1) * h, &err[i]);
      rough += panel[i];
    }
    const double tol = rel_tol_ * std::abs(rough) / pieces_;
    double total = 0.0;
    for (int i = 0; i < pieces_; ++i) {
      total += refine(f, a + i * h, a + (i + 1) * h, panel[i], err[i], tol, 0);
    }
    return total;
  }

 private:
  template <class F>
  static double kronrod(F& f, double a, double b, double* err) {
    static constexpr std::array<double, 8> x = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0};
    static constexpr std::array<double, 8> wk = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr std::array<double, 4> wg = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    const double fc = f(c);
    double k = wk[7] * fc;
    double g = wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
      const double s = f(c - r * x[i]) + f(c + r * x[i]);
      k += wk[i] * s;
      if (i % 2 == 1) g += wg[i / 2] * s;
    }
    *err = std::abs((k - g) * r);
    return k * r;
  }

  template <class F>
  double refine(F& f, double a, double b, double value, double err, double tol, int depth) const {
    if (err <= tol || depth >= max_depth_) return value;
    const double m = 0.5 * (a + b);
    double el = 0.0, er = 0.0;
    const double left = kronrod(f, a, m, &el);
    const double right = kronrod(f, m, b, &er);
    return refine(f, a, m, left, el, 0.5 * tol, depth + 1) +
           refine(f, m, b, right, er, 0.5 * tol, depth + 1);
  }

  double rel_tol_;
  int pieces_;
  int max_depth_;
};

// Window that holds essentially all of the mass of exp(-|x-m1|^2/2s1^2) exp(-|x-m2|^2/2s2^2)
// along one axis: the narrower factor bounds the product, so a wide margin around its
// mean (and covering the other mean's side) suffices.
inline std::pair<double, double> product_window(double m1, double s1, double m2, double s2) {
  const double narrow_m = s1 <= s2 ? m1 : m2;
  const double narrow_s = std::min(s1, s2);
  double lo = narrow_m - 14.0 * narrow_s;
  double hi = narrow_m + 14.0 * narrow_s;
  const double toward = (s1 <= s2 ? m2 : m1);
  if (toward < lo) lo = std::max(toward, narrow_m - 40.0 * narrow_s);
  if (toward > hi) hi = std::min(toward, narrow_m + 40.0 * narrow_s);
  return {lo, hi};
}

}  // namespace handtrack::testing
