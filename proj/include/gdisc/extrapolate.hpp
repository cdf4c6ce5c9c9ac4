#pragma once

// Ladder extrapolation and fitting helpers: power-law limits for sequences
// approaching a finite value, least-squares lines, and tail monotonicity.

#include <vector>

namespace gdisc {

struct PowerFit {
  double limit = 0.0;     // extrapolated value at x = 0
  double coeff = 0.0;     // leading correction amplitude
  int exponent = 1;       // chosen correction power
  double residual = 0.0;  // rms misfit of the winning model
};

// Fit y_k = limit + coeff * x_k^p over p in {1, 2}, keeping the model with
// the smaller residual.  x must be positive and is expected to approach 0.
PowerFit fit_power_limit(const std::vector<double>& x, const std::vector<double>& y);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;  // coefficient of determination
};

LineFit linefit(const std::vector<double>& x, const std::vector<double>& y);

// True when the last k entries strictly decrease.
bool monotone_decreasing_tail(const std::vector<double>& v, int k);

}  // namespace gdisc
