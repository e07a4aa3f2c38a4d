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

#ifndef FEDBRIDGE_GUESTFL_MODEL_H_
#define FEDBRIDGE_GUESTFL_MODEL_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace fedbridge::guestfl {

struct ModelVector {
  std::vector<double> weights;
  int64_t version = 0;

  bool operator==(const ModelVector&) const = default;
};

struct FitResult {
  ModelVector weights;
  int64_t num_examples = 0;
  std::map<std::string, double> metrics;

  bool operator==(const FitResult&) const = default;
};

struct EvalResult {
  double loss = 0;
  int64_t num_examples = 0;
  std::map<std::string, double> metrics;  // always has "accuracy"

  bool operator==(const EvalResult&) const = default;
};

// Throws Error(kNonFinite) naming `what`.
void CheckFinite(const std::vector<double>& v, const char* what);

// Standard normals via Box-Muller over mt19937_64. Spelled out rather than
// std::normal_distribution so every standard library yields the same data.
class NormalStream {
 public:
  explicit NormalStream(uint64_t seed) : rng_(seed) {}
  double Next();

 private:
  std::mt19937_64 rng_;
  bool has_spare_ = false;
  double spare_ = 0;
};

// Rows of x (row-major, n x d) and targets y.
struct Shard {
  size_t dimension = 0;
  std::vector<double> x;
  std::vector<double> y;

  size_t size() const { return y.size(); }
  const double* row(size_t i) const { return x.data() + i * dimension; }
};

struct SiteData {
  Shard train;
  Shard test;
};

std::vector<double> TrueWeights(uint64_t task_seed, size_t dimension);

// y = w_true . x + noise * e with x, e ~ N(0, 1). Train rows come first in
// the site's stream, then test rows.
SiteData GenerateSiteData(const std::vector<double>& true_weights, double noise,
                          uint64_t site_seed, size_t train_examples,
                          size_t test_examples);

double Dot(const double* a, const double* b, size_t n);

}  // namespace fedbridge::guestfl

#endif  // FEDBRIDGE_GUESTFL_MODEL_H_
