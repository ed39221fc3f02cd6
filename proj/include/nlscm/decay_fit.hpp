#pragma once

// Power-law fits of norm time series: value ~ A (1+t)^{-n} [log(2+t)]^m.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nlscm/error.hpp"

namespace nlscm {

struct DecayTrace {
  std::string label;
  std::vector<double> times;
  std::vector<double> values;
  std::pair<double, double> fit_window{2.0, 40.0};

  void push(double t, double v) {
    times.push_back(t);
    values.push_back(v);
  }

  /// Times strictly increasing and values positive inside the window.
  bool valid() const {
    if (times.size() != values.size()) return false;
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k] > times[k - 1])) return false;
    for (std::size_t k = 0; k < times.size(); ++k)
      if (times[k] >= fit_window.first && times[k] <= fit_window.second && !(values[k] > 0)) return false;
    return true;
  }

  double max_value() const {
    double m = 0;
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

struct ExponentFit {
  double exponent = 0;   ///< n
  double log_power = 0;  ///< m, 0 or 1
  double amplitude = 0;  ///< A
  double residual_rms = 0;
  std::size_t points = 0;
  std::pair<double, double> window{0, 0};
  // Both candidate models, kept so the selection is auditable.
  double exponent_power = 0, rms_power = 0;
  double exponent_log = 0, rms_log = 0;
};

namespace detail {
struct LineFit {
  double intercept = 0, slope = 0, rms = 0;
};

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - f.intercept - f.slope * x[k];
    ss += e * e;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}
}  // namespace detail

/// Least squares of log(value) against log(1+t) over the trace's fit window.
/// With `allow_log`, the model with a log(2+t) factor is selected when it
/// lowers the RMS log-residual by more than 15%.
inline ExponentFit fit_exponent(const DecayTrace& trace, bool allow_log) {
  const auto [lo, hi] = trace.fit_window;
  std::vector<double> x, y, loglog;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double t = trace.times[k];
    if (t < lo || t > hi) continue;
    if (!(trace.values[k] > 0) || !std::isfinite(trace.values[k]))
      throw InsufficientData("trace '" + trace.label + "' has a non-positive value inside the fit window");
    x.push_back(std::log1p(t));
    y.push_back(std::log(trace.values[k]));
    loglog.push_back(std::log(std::log(2.0 + t)));
  }
  if (x.size() < 12) throw InsufficientData("fit window of '" + trace.label + "' holds fewer than 12 points");
  if (std::exp(x.back() - x.front()) < 10.0 - 1e-9)
    throw InsufficientData("fit window of '" + trace.label + "' spans less than a decade of (1+t)");

  ExponentFit out;
  out.points = x.size();
  out.window = trace.fit_window;
  const auto pw = detail::least_squares_line(x, y);
  out.exponent_power = -pw.slope;
  out.rms_power = pw.rms;
  out.exponent = out.exponent_power;
  out.amplitude = std::exp(pw.intercept);
  out.residual_rms = pw.rms;
  if (allow_log) {
    std::vector<double> ylog(y);
    for (std::size_t k = 0; k < y.size(); ++k) ylog[k] -= loglog[k];
    const auto lf = detail::least_squares_line(x, ylog);
    out.exponent_log = -lf.slope;
    out.rms_log = lf.rms;
    if (lf.rms < 0.85 * pw.rms) {
      out.exponent = out.exponent_log;
      out.log_power = 1.0;
      out.amplitude = std::exp(lf.intercept);
      out.residual_rms = lf.rms;
    }
  }
  return out;
}

}  // namespace nlscm
