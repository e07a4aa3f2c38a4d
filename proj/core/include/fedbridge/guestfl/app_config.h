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

#ifndef FEDBRIDGE_GUESTFL_APP_CONFIG_H_
#define FEDBRIDGE_GUESTFL_APP_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fedbridge/guestfl/model.h"
#include "fedbridge/guestfl/strategy.h"

namespace fedbridge::guestfl {

struct SiteDataConfig {
  uint64_t seed = 0;
  int64_t train_examples = 0;
  int64_t test_examples = 0;
};

// Contents of app.json.
struct AppConfig {
  int64_t dimension = 16;
  int epochs = 1;
  double lr = 0.05;
  uint64_t task_seed = 0;
  double noise = 0.1;
  uint64_t init_seed = 0;
  double init_scale = 0.1;
  int64_t train_examples = 64;
  int64_t test_examples = 64;
  std::map<std::string, SiteDataConfig> sites;
  int num_rounds = 3;
  StrategyKind strategy = StrategyKind::kFedAvg;
  FedAdamParams fedadam;
  int min_clients = 1;
  int64_t poll_ms = 20;

  // Data settings for `site`; sites not listed derive a seed from task_seed
  // and the name and use the top-level example counts.
  SiteDataConfig ForSite(const std::string& site) const;
  SiteData MakeSiteData(const std::string& site) const;
  std::vector<double> InitialWeights() const;
};

// Strict: unknown keys, wrong types and out-of-range values throw
// Error(kInvalidConfig) with the offending key in the message.
AppConfig ParseAppConfig(const nlohmann::json& j);
AppConfig LoadAppConfig(const std::filesystem::path& path);
nlohmann::json AppConfigToJson(const AppConfig& config);

uint64_t SplitMix64(uint64_t x);
uint64_t Fnv1a(std::string_view text);

}  // namespace fedbridge::guestfl

#endif  // FEDBRIDGE_GUESTFL_APP_CONFIG_H_
