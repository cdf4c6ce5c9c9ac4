#include "gdisc/extrapolate.hpp"

#include <cmath>
#include <stdexcept>

namespace gdisc {

namespace {

// Least squares for y = limit + coeff * x^p; returns rms residual.
double fit_with_power(const std::vector<double>& x, const std::vector<double>& y, int p,
                      double& limit, double& coeff) {
  const size_t n = x.size();
  double sw = static_cast<double>(n), sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (size_t k = 0; k < n; ++k) {
    const double xk = std::pow(x[k], p);
    sx += xk;
    sxx += xk * xk;
    sy += y[k];
    sxy += xk * y[k];
  }
  const double det = sw * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw std::invalid_argument("degenerate abscissae");
  coeff = (sw * sxy - sx * sy) / det;
  limit = (sy - coeff * sx) / sw;
  double rss = 0;
  for (size_t k = 0; k < n; ++k) {
    const double r = y[k] - limit - coeff * std::pow(x[k], p);
    rss += r * r;
  }
  return std::sqrt(rss / static_cast<double>(n));
}

}  // namespace

PowerFit fit_power_limit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("power fit needs at least three samples");
  for (double v : x)
    if (!(v > 0.0)) throw std::invalid_argument("power fit abscissae must be positive");
  PowerFit best;
  bool have = false;
  for (int p : {1, 2}) {
    double limit, coeff;
    const double res = fit_with_power(x, y, p, limit, coeff);
    if (!have || res < best.residual) {
      best = PowerFit{limit, coeff, p, res};
      have = true;
    }
  }
  return best;
}

LineFit linefit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("line fit needs at least two samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw std::invalid_argument("degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double rss = 0, tss = 0;
  const double mean = sy / n;
  for (size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - f.intercept - f.slope * x[k];
    rss += r * r;
    tss += (y[k] - mean) * (y[k] - mean);
  }
  f.r2 = tss > 0 ? 1.0 - rss / tss : 1.0;
  return f;
}

bool monotone_decreasing_tail(const std::vector<double>& v, int k) {
  if (k < 2 || static_cast<size_t>(k) > v.size()) return false;
  for (size_t i = v.size() - static_cast<size_t>(k) + 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace gdisc
