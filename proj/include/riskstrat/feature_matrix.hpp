// Copyright 2026 The riskstrat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "riskstrat/cohort_data.hpp"

namespace riskstrat {

/// One compressed column: nonzero rows in ascending order.
struct FeatureColumn {
  CovariateId id = 0;
  CovariateKind kind = CovariateKind::binary;
  std::vector<std::uint32_t> rows;
  std::vector<double> values;
};

/// Column-compressed design matrix for one fitting task. Only covariates with
/// at least one nonzero among the selected rows get a column.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n_rows, std::vector<FeatureColumn> columns);

  /// Rows follow `subjects` order.
  static FeatureMatrix from_table(const CovariateTable& table, std::span<const SubjectId> subjects);

  /// Row-major dense values; zeros are dropped.
  static FeatureMatrix from_dense(std::size_t n_rows, std::size_t n_cols,
                                  std::span<const double> row_major,
                                  std::span<const CovariateKind> kinds = {});

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return columns_.size(); }
  const FeatureColumn& column(std::size_t j) const { return columns_[j]; }
  const std::vector<FeatureColumn>& columns() const noexcept { return columns_; }

  /// intercept + sum of coefficient * value; coefficients for covariates
  /// without a column are ignored.
  std::vector<double> linear_predictor(double intercept,
                                       const std::map<CovariateId, double>& coefficients) const;

 private:
  std::size_t n_rows_ = 0;
  std::vector<FeatureColumn> columns_;
};

}  // namespace riskstrat
