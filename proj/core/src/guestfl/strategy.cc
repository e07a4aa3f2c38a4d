/*
 * Copyright 2026 The fedbridge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fedbridge/guestfl/strategy.h"

#include <cmath>

#include "fedbridge/error.h"

namespace fedbridge::guestfl {

std::vector<double> AggregateFedAvg(const std::vector<FitResult>& results) {
  if (results.empty()) throw Error(ErrorCode::kEmptyInput, "no fit results to aggregate");
  const size_t d = results.front().weights.weights.size();
  for (const auto& r : results) {
    if (r.weights.weights.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "fit results differ in dimension");
    }
    if (r.num_examples < 1) {
      throw Error(ErrorCode::kInvalidConfig, "num_examples must be positive");
    }
    CheckFinite(r.weights.weights, "fit");
  }
  std::vector<double> mean = results.front().weights.weights;
  double total = static_cast<double>(results.front().num_examples);
  for (size_t k = 1; k < results.size(); ++k) {
    const double n = static_cast<double>(results[k].num_examples);
    total += n;
    const double share = n / total;
    const auto& w = results[k].weights.weights;
    for (size_t j = 0; j < d; ++j) mean[j] += share * (w[j] - mean[j]);
  }
  return mean;
}

std::vector<double> AggregateFedAvg(const std::map<std::string, FitResult>& by_site) {
  std::vector<FitResult> ordered;
  ordered.reserve(by_site.size());
  for (const auto& [site, r] : by_site) ordered.push_back(r);
  return AggregateFedAvg(ordered);
}

std::vector<double> FedAdamStep(const std::vector<double>& global,
                                const std::vector<double>& avg,
                                const FedAdamParams& params, FedAdamState& state) {
  const size_t d = global.size();
  if (avg.size() != d) throw Error(ErrorCode::kDimensionMismatch, "fedadam input");
  if (state.m.empty()) state.m.assign(d, 0.0);
  if (state.v.empty()) state.v.assign(d, 0.0);
  if (state.m.size() != d || state.v.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "fedadam moments");
  }
  std::vector<double> w(d);
  for (size_t j = 0; j < d; ++j) {
    const double delta = avg[j] - global[j];
    state.m[j] = params.beta_1 * state.m[j] + (1.0 - params.beta_1) * delta;
    state.v[j] = params.beta_2 * state.v[j] + (1.0 - params.beta_2) * delta * delta;
    w[j] = global[j] + params.eta * state.m[j] / (std::sqrt(state.v[j]) + params.tau);
  }
  CheckFinite(w, "fedadam");
  return w;
}

std::vector<double> Strategy::Aggregate(const std::vector<double>& global,
                                        const std::map<std::string, FitResult>& by_site) {
  std::vector<double> avg = AggregateFedAvg(by_site);
  if (avg.size() != global.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "fit results differ from global model");
  }
  if (kind_ == StrategyKind::kFedAvg) return avg;
  return FedAdamStep(global, avg, params_, state_);
}

}  // namespace fedbridge::guestfl
