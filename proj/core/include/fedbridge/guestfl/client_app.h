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

#ifndef FEDBRIDGE_GUESTFL_CLIENT_APP_H_
#define FEDBRIDGE_GUESTFL_CLIENT_APP_H_

#include <string>

#include "fedbridge/guestfl/model.h"
#include "fedbridge/tracking/scalar_writer.h"

namespace fedbridge::guestfl {

// Least-squares client: full-batch gradient descent on the local shard.
class ClientApp {
 public:
  ClientApp(SiteData data, int epochs, double lr,
            tracking::ScalarWriter* writer = nullptr)
      : data_(std::move(data)), epochs_(epochs), lr_(lr), writer_(writer) {}

  // Runs `epochs` steps of w -= lr * (1/n) sum (w.x - y) x starting from
  // `global`. Each epoch logs the mean of 0.5 (w.x - y)^2 before its step
  // as "train_loss" at the next global step. Throws Error(kDimensionMismatch)
  // or Error(kNonFinite).
  FitResult Fit(const ModelVector& global);

  // Mean squared error on the test shard; accuracy is the fraction of rows
  // where sign(w.x) matches sign(y).
  EvalResult Evaluate(const ModelVector& global) const;

  void set_writer(tracking::ScalarWriter* writer) { writer_ = writer; }
  tracking::ScalarWriter* writer() const { return writer_; }
  const SiteData& data() const { return data_; }
  int64_t train_step() const { return train_step_; }

 private:
  void CheckInput(const ModelVector& global) const;

  SiteData data_;
  int epochs_;
  double lr_;
  tracking::ScalarWriter* writer_;
  int64_t train_step_ = 0;
};

}  // namespace fedbridge::guestfl

#endif  // FEDBRIDGE_GUESTFL_CLIENT_APP_H_
