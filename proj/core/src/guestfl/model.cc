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

#include "fedbridge/guestfl/model.h"

#include <cmath>
#include <numbers>

#include "fedbridge/error.h"

namespace fedbridge::guestfl {

void CheckFinite(const std::vector<double>& v, const char* what) {
  for (size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::kNonFinite,
                  std::string(what) + "[" + std::to_string(i) + "] is not finite");
    }
  }
}

double NormalStream::Next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite.
  double u1 = 1.0 - static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Dot(const double* a, const double* b, size_t n) {
  double s = 0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> TrueWeights(uint64_t task_seed, size_t dimension) {
  NormalStream normal(task_seed);
  std::vector<double> w(dimension);
  for (auto& v : w) v = normal.Next();
  return w;
}

namespace {

Shard Draw(NormalStream& normal, const std::vector<double>& w, double noise, size_t n) {
  Shard s;
  s.dimension = w.size();
  s.x.resize(n * w.size());
  s.y.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double* row = s.x.data() + i * w.size();
    for (size_t j = 0; j < w.size(); ++j) row[j] = normal.Next();
    s.y[i] = Dot(row, w.data(), w.size()) + noise * normal.Next();
  }
  return s;
}

}  // namespace

SiteData GenerateSiteData(const std::vector<double>& true_weights, double noise,
                          uint64_t site_seed, size_t train_examples,
                          size_t test_examples) {
  NormalStream normal(site_seed);
  SiteData data;
  data.train = Draw(normal, true_weights, noise, train_examples);
  data.test = Draw(normal, true_weights, noise, test_examples);
  return data;
}

}  // namespace fedbridge::guestfl
