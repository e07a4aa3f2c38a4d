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

#ifndef FEDBRIDGE_GUESTFL_STRATEGY_H_
#define FEDBRIDGE_GUESTFL_STRATEGY_H_

#include <map>
#include <string>
#include <vector>

#include "fedbridge/guestfl/model.h"

namespace fedbridge::guestfl {

// w = sum n_i w_i / sum n_i, reduced as a running weighted mean in the given
// order so identical inputs come back unchanged bit for bit. Throws
// Error(kEmptyInput), Error(kDimensionMismatch) or Error(kNonFinite).
std::vector<double> AggregateFedAvg(const std::vector<FitResult>& results);
// Canonical order: ascending site name.
std::vector<double> AggregateFedAvg(const std::map<std::string, FitResult>& by_site);

struct FedAdamParams {
  double eta = 0.1;
  double beta_1 = 0.9;
  double beta_2 = 0.99;
  double tau = 1e-9;
};

struct FedAdamState {
  std::vector<double> m;
  std::vector<double> v;
};

// Delta = avg - global; m <- b1 m + (1-b1) Delta; v <- b2 v + (1-b2) Delta^2;
// w = global + eta m / (sqrt(v) + tau). Empty moments start at zero.
std::vector<double> FedAdamStep(const std::vector<double>& global,
                                const std::vector<double>& avg,
                                const FedAdamParams& params, FedAdamState& state);

enum class StrategyKind { kFedAvg, kFedAdam };

class Strategy {
 public:
  Strategy(StrategyKind kind, FedAdamParams params) : kind_(kind), params_(params) {}

  std::vector<double> Aggregate(const std::vector<double>& global,
                                const std::map<std::string, FitResult>& by_site);
  const FedAdamState& state() const { return state_; }

 private:
  StrategyKind kind_;
  FedAdamParams params_;
  FedAdamState state_;
};

}  // namespace fedbridge::guestfl

#endif  // FEDBRIDGE_GUESTFL_STRATEGY_H_
