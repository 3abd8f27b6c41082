#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stclear/error.hpp"

namespace stclear {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class ObjectiveSense { Maximize, Minimize };

struct MatrixEntry {
  std::size_t row = 0;
  double value = 0.0;
};

/// opt c'x  s.t.  A x = b,  lower <= x <= upper.
/// A is stored column-wise; infinite bounds mark free directions.
class LinearProgram {
 public:
  explicit LinearProgram(std::size_t rows = 0, ObjectiveSense sense = ObjectiveSense::Maximize)
      : sense_(sense), rhs_(rows, 0.0), row_labels_(rows) {
    column_start_.push_back(0);
  }

  std::size_t add_column(std::string label, double objective, double lower, double upper,
                         std::vector<MatrixEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.row < b.row; });
    std::vector<MatrixEntry> merged;
    for (const auto& e : entries) {
      if (e.row >= rows()) throw Error(ErrorCode::DimensionMismatch, "entry row out of range in column " + label);
      if (!merged.empty() && merged.back().row == e.row) merged.back().value += e.value;
      else merged.push_back(e);
    }
    std::erase_if(merged, [](const MatrixEntry& e) { return e.value == 0.0; });

    entries_.insert(entries_.end(), merged.begin(), merged.end());
    column_start_.push_back(entries_.size());
    objective_.push_back(objective);
    lower_.push_back(lower);
    upper_.push_back(upper);
    column_labels_.push_back(std::move(label));
    return objective_.size() - 1;
  }

  void set_rhs(std::size_t row, double value) { rhs_.at(row) = value; }
  void set_row_label(std::size_t row, std::string label) { row_labels_.at(row) = std::move(label); }

  std::size_t rows() const noexcept { return rhs_.size(); }
  std::size_t cols() const noexcept { return objective_.size(); }
  std::size_t nonzeros() const noexcept { return entries_.size(); }
  ObjectiveSense sense() const noexcept { return sense_; }

  double objective(std::size_t j) const { return objective_[j]; }
  double lower(std::size_t j) const { return lower_[j]; }
  double upper(std::size_t j) const { return upper_[j]; }
  std::span<const MatrixEntry> column(std::size_t j) const {
    return {entries_.data() + column_start_[j], column_start_[j + 1] - column_start_[j]};
  }

  const std::vector<double>& objective() const noexcept { return objective_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  const std::vector<double>& rhs() const noexcept { return rhs_; }
  const std::vector<std::string>& column_labels() const noexcept { return column_labels_; }
  const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }

  double objective_value(std::span<const double> x) const {
    require_columns(x.size());
    double total = 0.0;
    for (std::size_t j = 0; j < cols(); ++j) total += objective_[j] * x[j];
    return total;
  }

  std::vector<double> multiply(std::span<const double> x) const {
    require_columns(x.size());
    std::vector<double> ax(rows(), 0.0);
    for (std::size_t j = 0; j < cols(); ++j) {
      if (x[j] == 0.0) continue;
      for (const auto& e : column(j)) ax[e.row] += e.value * x[j];
    }
    return ax;
  }

  /// a_j' y for every column.
  std::vector<double> transpose_multiply(std::span<const double> y) const {
    if (y.size() != rows()) throw Error(ErrorCode::DimensionMismatch, "row vector has wrong length");
    std::vector<double> out(cols(), 0.0);
    for (std::size_t j = 0; j < cols(); ++j) {
      double s = 0.0;
      for (const auto& e : column(j)) s += e.value * y[e.row];
      out[j] = s;
    }
    return out;
  }

 private:
  void require_columns(std::size_t n) const {
    if (n != cols()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "vector of length " + std::to_string(n) + " for " + std::to_string(cols()) + " columns");
    }
  }

  ObjectiveSense sense_;
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> rhs_;
  std::vector<std::size_t> column_start_;
  std::vector<MatrixEntry> entries_;
  std::vector<std::string> column_labels_;
  std::vector<std::string> row_labels_;
};

/// |A x - b| per row.
inline std::vector<double> row_residuals(const LinearProgram& lp, std::span<const double> x) {
  auto ax = lp.multiply(x);
  for (std::size_t r = 0; r < ax.size(); ++r) ax[r] = std::abs(ax[r] - lp.rhs()[r]);
  return ax;
}

}  // namespace stclear
