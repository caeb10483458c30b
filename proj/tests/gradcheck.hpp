#pragma once

// Central finite-difference gradient checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

struct GradCheck {
  double worst_relative = 0.0;
  std::size_t checked = 0;
};

// Compares `analytic` against (f(p + h) - f(p - h)) / 2h for every entry of
// `params`. Entries where both gradients are below `abs_floor` are compared
// absolutely, since relative error is meaningless there.
inline GradCheck check_gradient(std::span<double> params,
                                std::span<const double> analytic,
                                const std::function<double()>& f,
                                double step = 1e-5, double abs_floor = 1e-6) {
  GradCheck out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = f();
    params[i] = saved - step;
    const double down = f();
    params[i] = saved;
    const double numeric = (up - down) / (2 * step);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), abs_floor});
    out.worst_relative = std::max(out.worst_relative, std::abs(numeric - analytic[i]) / scale);
    ++out.checked;
  }
  return out;
}

}  // namespace oracle
