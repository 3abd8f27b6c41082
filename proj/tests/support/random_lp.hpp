#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stclear/linear_program.hpp"

namespace testing_support {

/// Box-bounded LP with at most 6 columns and 4 rows. Most draws set b = A x0
/// for an interior-ish x0 (feasible); about one in six draws a free b, which
/// may be infeasible. Half of the programs use small integers to create ties.
inline stclear::LinearProgram random_lp(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  const bool integral = rng() % 2 == 0;
  auto value = [&](double lo, double hi) {
    const double v = lo + (hi - lo) * unit();
    return integral ? std::round(v) : v;
  };

  const int cols = pick(1, 6);
  const int rows = pick(0, 4);
  const auto sense = rng() % 2 == 0 ? stclear::ObjectiveSense::Maximize : stclear::ObjectiveSense::Minimize;
  stclear::LinearProgram lp(static_cast<std::size_t>(rows), sense);

  std::vector<double> x0(static_cast<std::size_t>(cols));
  std::vector<std::vector<stclear::MatrixEntry>> columns(static_cast<std::size_t>(cols));
  std::vector<double> lower(static_cast<std::size_t>(cols)), upper(static_cast<std::size_t>(cols));
  for (int j = 0; j < cols; ++j) {
    const auto k = static_cast<std::size_t>(j);
    lower[k] = unit() < 0.7 ? 0.0 : value(-5.0, 0.0);
    upper[k] = lower[k] + (unit() < 0.1 ? 0.0 : value(1.0, 10.0));
    x0[k] = lower[k] + (upper[k] - lower[k]) * unit();
    for (int r = 0; r < rows; ++r) {
      if (unit() < 0.6) columns[k].push_back({static_cast<std::size_t>(r), value(-3.0, 3.0)});
    }
  }
  for (int j = 0; j < cols; ++j) {
    const auto k = static_cast<std::size_t>(j);
    lp.add_column("x" + std::to_string(j), value(-5.0, 5.0), lower[k], upper[k], columns[k]);
  }
  const bool free_rhs = rng() % 6 == 0;
  const auto ax0 = lp.multiply(x0);
  for (int r = 0; r < rows; ++r) {
    const auto k = static_cast<std::size_t>(r);
    lp.set_rhs(k, free_rhs ? value(-5.0, 5.0) : ax0[k]);
  }
  return lp;
}

}  // namespace testing_support
