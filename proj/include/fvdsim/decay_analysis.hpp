#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fvdsim/errors.hpp"

namespace fvd {

struct FitWindow {
  double t_a = 0.0;
  double t_b = 0.0;
};

// N(t) = A exp(-gamma t). r_squared and residual_rms refer to the ln N regression.
struct ExpFit {
  double A = 0.0;
  double gamma = 0.0;
  FitWindow window;
  double r_squared = 0.0;
  double residual_rms = 0.0;
  int n_points = 0;
};

enum class ScalingKind { confinement, gap, q_vs_alpha };

inline std::string_view to_string(ScalingKind k) {
  switch (k) {
    case ScalingKind::confinement: return "confinement";
    case ScalingKind::gap: return "gap";
    case ScalingKind::q_vs_alpha: return "q_vs_alpha";
  }
  return "?";
}

// confinement: gamma = b exp(-p x), x = 1/beta           -> (prefactor=b, exponent=p)
// gap:         gamma = k exp(-q x), x = dE20/Omega       -> (prefactor=k, exponent=q)
// q_vs_alpha:  q = u (alpha0 - alpha), x = alpha         -> (u, alpha0)
struct RateScalingFit {
  ScalingKind kind = ScalingKind::confinement;
  double first = 0.0;   // b, k or u
  double second = 0.0;  // p, q or alpha0
  double x_min = 0.0;
  double x_max = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  double residual_rms = 0.0;
};

// Ordinary least squares y = intercept + slope x.
inline LinearFit linear_least_squares(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw InvalidParameter("linear fit needs >= 2 paired samples");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidParameter("degenerate abscissae: all x values equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  f.residual_rms = std::sqrt(ss_res / n);
  return f;
}

// Savitzky-Golay smoothing: each sample becomes the value at its own position
// of the least-squares polynomial over the window centred on it. Near the
// ends the window is cut at the boundary (one-sided) and the order is capped
// by the available points.
inline std::vector<double> savitzky_golay(std::span<const double> series, int window_len, int order) {
  if (window_len < 1 || window_len % 2 == 0) throw InvalidParameter("Savitzky-Golay window length must be odd");
  if (order < 0 || order >= window_len) throw InvalidParameter("Savitzky-Golay order must satisfy 0 <= order < window");
  const auto n = static_cast<int>(series.size());
  if (n < window_len) throw InvalidParameter("series shorter than the Savitzky-Golay window");
  const int half = window_len / 2;
  std::vector<double> out(static_cast<std::size_t>(n));

  // Interior weights are position independent: row 0 of the pseudo-inverse.
  auto weights = [](int lo, int hi, int centre, int ord) {
    const int len = hi - lo + 1;
    const int p = std::min(ord, len - 1);
    Eigen::MatrixXd V(len, p + 1);
    for (int r = 0; r < len; ++r) {
      const double x = r + lo - centre;
      double v = 1.0;
      for (int c = 0; c <= p; ++c) {
        V(r, c) = v;
        v *= x;
      }
    }
    // Value at x = 0 is the constant coefficient.
    const Eigen::MatrixXd pinv = V.completeOrthogonalDecomposition().pseudoInverse();
    return Eigen::VectorXd(pinv.row(0).transpose());
  };
  const Eigen::VectorXd interior = weights(-half, half, 0, order);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    const Eigen::VectorXd w = (hi - lo + 1 == window_len) ? interior : weights(lo, hi, i, order);
    double s = 0.0;
    for (int r = lo; r <= hi; ++r) s += w(r - lo) * series[static_cast<std::size_t>(r)];
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

// 10%-90% descent window of a smoothed curve restricted to [t_lo, t_hi]:
// t_a is the first sample below max - 0.1 range, t_b the first below
// max - 0.9 range.
inline FitWindow select_fit_window(std::span<const double> times, std::span<const double> smoothed, double t_lo,
                                   double t_hi) {
  if (times.size() != smoothed.size() || times.empty()) throw InvalidParameter("times/values size mismatch");
  if (!(t_hi > t_lo)) throw InvalidParameter("window search interval is empty");
  if (t_lo < times.front() - 1e-12 || t_hi > times.back() + 1e-12)
    throw InvalidParameter("window search interval lies outside the sampled range");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] >= t_lo - 1e-12 && times[i] <= t_hi + 1e-12) idx.push_back(i);
  if (idx.size() < 2) throw WindowNotFound("fewer than two samples in the search interval");
  double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
  for (auto i : idx) {
    hi = std::max(hi, smoothed[i]);
    lo = std::min(lo, smoothed[i]);
  }
  const double range = hi - lo;
  if (!(range > 0.0)) throw WindowNotFound("smoothed curve is flat on the search interval");
  const double thr_a = hi - 0.1 * range;
  const double thr_b = hi - 0.9 * range;
  std::optional<double> ta, tb;
  for (auto i : idx) {
    if (!ta && smoothed[i] < thr_a) ta = times[i];
    if (!tb && smoothed[i] < thr_b) tb = times[i];
  }
  if (!ta || !tb || !(*ta < *tb)) throw WindowNotFound("10%/90% thresholds not crossed in descending order");
  return {*ta, *tb};
}

// Log-domain least squares of N = A exp(-gamma t) on samples inside the window.
inline ExpFit fit_exponential(std::span<const double> times, std::span<const double> values, FitWindow window) {
  if (times.size() != values.size()) throw InvalidParameter("times/values size mismatch");
  if (!(window.t_a < window.t_b)) throw InvalidParameter("fit window must satisfy t_a < t_b");
  std::vector<double> x, y;
  const double eps = 1e-12 * std::max(1.0, std::abs(window.t_b));
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.t_a - eps || times[i] > window.t_b + eps) continue;
    if (!(values[i] > 0.0)) throw FitError("non-positive sample at t=" + std::to_string(times[i]) + " inside fit window");
    x.push_back(times[i]);
    y.push_back(std::log(values[i]));
  }
  if (x.size() < 5) throw FitError("fewer than 5 samples inside the fit window");
  const auto lf = linear_least_squares(x, y);
  ExpFit f;
  f.A = std::exp(lf.intercept);
  f.gamma = -lf.slope;
  f.window = window;
  f.r_squared = lf.r_squared;
  f.residual_rms = lf.residual_rms;
  f.n_points = static_cast<int>(x.size());
  return f;
}

// Shrinks the window so that it ends before the first non-positive sample.
inline FitWindow truncate_at_nonpositive(std::span<const double> times, std::span<const double> values,
                                         FitWindow w) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < w.t_a || times[i] > w.t_b) continue;
    if (!(values[i] > 0.0)) {
      if (i == 0 || !(times[i - 1] > w.t_a)) throw FitError("fit window starts at a non-positive sample");
      w.t_b = times[i - 1];
      break;
    }
  }
  return w;
}

inline RateScalingFit fit_rate_scaling(std::span<const std::pair<double, double>> points, ScalingKind kind) {
  if (points.size() < 3) throw InvalidParameter("rate scaling fit needs at least 3 points");
  std::vector<double> x, y;
  for (const auto& [xi, yi] : points) {
    if (kind != ScalingKind::q_vs_alpha && !(yi > 0.0))
      throw InvalidParameter("exponential scaling fit needs gamma > 0");
    x.push_back(xi);
    y.push_back(kind == ScalingKind::q_vs_alpha ? yi : std::log(yi));
  }
  const auto lf = linear_least_squares(x, y);
  RateScalingFit f;
  f.kind = kind;
  f.r_squared = lf.r_squared;
  f.n_points = static_cast<int>(points.size());
  f.x_min = *std::min_element(x.begin(), x.end());
  f.x_max = *std::max_element(x.begin(), x.end());
  if (kind == ScalingKind::q_vs_alpha) {
    // q = u alpha0 - u alpha
    f.first = -lf.slope;
    f.second = f.first != 0.0 ? lf.intercept / f.first : std::numeric_limits<double>::quiet_NaN();
  } else {
    f.first = std::exp(lf.intercept);
    f.second = -lf.slope;
  }
  return f;
}

// Critical bubble size in sites, Delta_glob / |Delta_loc|.
inline double critical_bubble_size(double delta_glob, double delta_loc) {
  if (delta_loc == 0.0) throw InvalidParameter("critical bubble size undefined for delta_loc = 0");
  return delta_glob / std::abs(delta_loc);
}

// Classical energy of a single n-site bubble in the false vacuum, V2 neglected.
inline double classical_bubble_energy(double eps0, double delta_glob, double delta_loc, int n) {
  return eps0 + delta_glob - n * delta_loc;
}

// Two-step domain-wall hopping scale Omega^2/Delta_glob + Omega^2/V1.
inline double hopping_energy_estimate(double omega, double delta_glob, double v1) {
  if (!(delta_glob > 0.0) || !(v1 > 0.0)) throw InvalidParameter("hopping estimate needs delta_glob, v1 > 0");
  return omega * omega / delta_glob + omega * omega / v1;
}

// |f(theta0)| = 2 int_0^{|ln h_x|} sqrt(1 + h_x^2 - 2 h_x cosh phi) dphi.
inline double ising_wall_action(double h_x) {
  const double h = std::abs(h_x);
  if (!(h > 0.0) || !(h < 1.0)) throw InvalidParameter("Ising exponent requires 0 < |h_x| < 1");
  const double upper = -std::log(h);
  auto integrand = [h](double phi) {
    const double v = 1.0 + h * h - 2.0 * h * std::cosh(phi);
    return v > 0.0 ? std::sqrt(v) : 0.0;
  };
  double err = 0.0;
  const double val =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, upper, 30, 1e-13, &err);
  return 2.0 * val;
}

// Decay-rate exponent |f(theta0)| / (|h_z| M) of the confined Ising chain,
// with M = (1 - h_x^2)^{1/8}.
inline double ising_reference_exponent(double h_x, double h_z) {
  if (h_z == 0.0) throw InvalidParameter("Ising exponent requires h_z != 0");
  const double m = std::pow(1.0 - h_x * h_x, 0.125);
  return ising_wall_action(h_x) / (std::abs(h_z) * m);
}

}  // namespace fvd
