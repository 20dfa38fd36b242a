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

#include "riskstrat/feature_matrix.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "riskstrat/error.hpp"

namespace riskstrat {

FeatureMatrix::FeatureMatrix(std::size_t n_rows, std::vector<FeatureColumn> columns)
    : n_rows_(n_rows), columns_(std::move(columns)) {
  if (n_rows > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::invalid_input, "feature matrix: too many rows");
  for (const auto& c : columns_) {
    if (c.rows.size() != c.values.size())
      throw Error(ErrorCode::invalid_input, "feature matrix: ragged column");
    for (auto r : c.rows)
      if (r >= n_rows_) throw Error(ErrorCode::invalid_input, "feature matrix: row out of range");
  }
}

FeatureMatrix FeatureMatrix::from_table(const CovariateTable& table,
                                        std::span<const SubjectId> subjects) {
  std::map<CovariateId, FeatureColumn> by_id;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    for (const auto& e : table.row(subjects[i])) {
      auto& col = by_id[e.covariate];
      col.rows.push_back(static_cast<std::uint32_t>(i));
      col.values.push_back(e.value);
    }
  }
  std::vector<FeatureColumn> cols;
  cols.reserve(by_id.size());
  for (auto& [id, col] : by_id) {
    col.id = id;
    auto it = table.meta().find(id);
    col.kind = it != table.meta().end() ? it->second.kind : CovariateKind::continuous;
    cols.push_back(std::move(col));
  }
  return FeatureMatrix(subjects.size(), std::move(cols));
}

FeatureMatrix FeatureMatrix::from_dense(std::size_t n_rows, std::size_t n_cols,
                                        std::span<const double> row_major,
                                        std::span<const CovariateKind> kinds) {
  if (row_major.size() != n_rows * n_cols)
    throw Error(ErrorCode::invalid_input, "feature matrix: dense size mismatch");
  std::vector<FeatureColumn> cols(n_cols);
  for (std::size_t j = 0; j < n_cols; ++j) {
    cols[j].id = static_cast<CovariateId>(j);
    cols[j].kind = kinds.empty() ? CovariateKind::continuous : kinds[j];
    for (std::size_t i = 0; i < n_rows; ++i) {
      double v = row_major[i * n_cols + j];
      if (v != 0.0) {
        cols[j].rows.push_back(static_cast<std::uint32_t>(i));
        cols[j].values.push_back(v);
      }
    }
  }
  return FeatureMatrix(n_rows, std::move(cols));
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  // A source row may be selected more than once; targets[start[r]..start[r+1]) lists its positions.
  std::vector<std::uint32_t> start(n_rows_ + 1, 0);
  for (auto r : rows) {
    if (r >= n_rows_) throw Error(ErrorCode::invalid_input, "select_rows: row index out of range");
    ++start[r + 1];
  }
  for (std::size_t r = 0; r < n_rows_; ++r) start[r + 1] += start[r];
  std::vector<std::uint32_t> targets(rows.size());
  {
    auto fill = start;
    for (std::size_t k = 0; k < rows.size(); ++k) targets[fill[rows[k]]++] = static_cast<std::uint32_t>(k);
  }
  std::vector<FeatureColumn> cols;
  for (const auto& c : columns_) {
    FeatureColumn out{c.id, c.kind, {}, {}};
    std::vector<std::pair<std::uint32_t, double>> tmp;
    for (std::size_t k = 0; k < c.rows.size(); ++k)
      for (auto t = start[c.rows[k]]; t < start[c.rows[k] + 1]; ++t) tmp.emplace_back(targets[t], c.values[k]);
    if (tmp.empty()) continue;
    std::sort(tmp.begin(), tmp.end());
    out.rows.reserve(tmp.size());
    out.values.reserve(tmp.size());
    for (auto [r, v] : tmp) {
      out.rows.push_back(r);
      out.values.push_back(v);
    }
    cols.push_back(std::move(out));
  }
  return FeatureMatrix(rows.size(), std::move(cols));
}

std::vector<double> FeatureMatrix::linear_predictor(
    double intercept, const std::map<CovariateId, double>& coefficients) const {
  std::vector<double> eta(n_rows_, intercept);
  for (const auto& c : columns_) {
    auto it = coefficients.find(c.id);
    if (it == coefficients.end() || it->second == 0.0) continue;
    for (std::size_t k = 0; k < c.rows.size(); ++k) eta[c.rows[k]] += it->second * c.values[k];
  }
  return eta;
}

}  // namespace riskstrat
