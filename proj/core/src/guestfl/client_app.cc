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

#include "fedbridge/guestfl/client_app.h"

#include "fedbridge/error.h"

namespace fedbridge::guestfl {

void ClientApp::CheckInput(const ModelVector& global) const {
  if (global.weights.size() != data_.train.dimension) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model has " + std::to_string(global.weights.size()) +
                    " weights, data has dimension " +
                    std::to_string(data_.train.dimension));
  }
  CheckFinite(global.weights, "global");
}

FitResult ClientApp::Fit(const ModelVector& global) {
  CheckInput(global);
  const Shard& s = data_.train;
  const size_t d = s.dimension;
  const double n = static_cast<double>(s.size());
  std::vector<double> w = global.weights;
  std::vector<double> grad(d);
  for (int epoch = 0; epoch < epochs_; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0;
    for (size_t i = 0; i < s.size(); ++i) {
      const double* row = s.row(i);
      double r = Dot(w.data(), row, d) - s.y[i];
      loss += 0.5 * r * r;
      for (size_t j = 0; j < d; ++j) grad[j] += r * row[j];
    }
    for (size_t j = 0; j < d; ++j) w[j] -= lr_ * (grad[j] / n);
    if (writer_ != nullptr) writer_->AddScalar("train_loss", loss / n, train_step_);
    ++train_step_;
  }
  CheckFinite(w, "fit");
  FitResult result;
  result.weights = {std::move(w), global.version};
  result.num_examples = static_cast<int64_t>(s.size());
  return result;
}

EvalResult ClientApp::Evaluate(const ModelVector& global) const {
  CheckInput(global);
  const Shard& s = data_.test;
  double loss = 0;
  size_t correct = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    double pred = Dot(global.weights.data(), s.row(i), s.dimension);
    double r = pred - s.y[i];
    loss += r * r;
    if ((pred >= 0) == (s.y[i] >= 0)) ++correct;
  }
  const double n = static_cast<double>(s.size());
  EvalResult result;
  result.loss = loss / n;
  result.num_examples = static_cast<int64_t>(s.size());
  result.metrics["accuracy"] = static_cast<double>(correct) / n;
  return result;
}

}  // namespace fedbridge::guestfl
