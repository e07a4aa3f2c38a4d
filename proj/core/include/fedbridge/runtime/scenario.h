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

#ifndef FEDBRIDGE_RUNTIME_SCENARIO_H_
#define FEDBRIDGE_RUNTIME_SCENARIO_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedbridge/guestfl/app_config.h"
#include "fedbridge/netsim/fabric.h"
#include "fedbridge/runtime/job.h"

namespace fedbridge::runtime {

struct SiteConfig {
  std::string name;
  int slots = 1;
};

enum class FaultAction { kPartition, kHeal, kAbort };
enum class LinkPath { kControl, kDirect };
enum class LinkDirection { kBoth, kToServer, kFromServer };

// A scheduled change to the simulated network (or an operator abort).
// Direct-link events whose link does not exist yet take effect when it opens.
struct FaultEvent {
  int64_t t_ms = 0;
  FaultAction action = FaultAction::kPartition;
  std::string site;
  LinkPath path = LinkPath::kControl;
  LinkDirection direction = LinkDirection::kBoth;
  std::string job;  // direct links and aborts
};

struct ScenarioConfig {
  uint64_t seed = 0;
  std::vector<SiteConfig> sites;
  netsim::LinkPolicy default_link;
  std::map<std::string, netsim::LinkPolicy> links;  // per site
  std::optional<netsim::LinkPolicy> direct_link;    // default: the site's link
  Messaging messaging = Messaging::kRelay;
  bool allow_direct = true;
  std::map<std::string, guestfl::AppConfig> apps;
  int64_t heartbeat_ms = 1000;
  int missed_heartbeats = 3;
  std::vector<FaultEvent> events;
  int64_t time_limit_ms = 3'600'000;
  std::filesystem::path runs_dir = "runs";
  std::string server_host = "127.0.0.1";
  int server_port = 7700;

  // Policy for the control link of `site`, with a seed derived from the
  // scenario seed unless one was given.
  netsim::LinkPolicy LinkFor(const std::string& site) const;
  netsim::LinkPolicy DirectLinkFor(const std::string& site, const std::string& job) const;
  const SiteConfig* FindSite(const std::string& name) const;
};

// Strict parse. Relative app and runs paths resolve against `base_dir`.
// Throws Error(kInvalidConfig).
ScenarioConfig ParseScenario(const nlohmann::json& j, const std::filesystem::path& base_dir);
ScenarioConfig LoadScenario(const std::filesystem::path& path);

// Reads `path` as JSON or throws Error(kInvalidConfig).
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

}  // namespace fedbridge::runtime

#endif  // FEDBRIDGE_RUNTIME_SCENARIO_H_
