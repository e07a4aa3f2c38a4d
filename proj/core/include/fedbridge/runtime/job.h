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

#ifndef FEDBRIDGE_RUNTIME_JOB_H_
#define FEDBRIDGE_RUNTIME_JOB_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedbridge/reliable/endpoint.h"

namespace fedbridge::runtime {

enum class JobState { kSubmitted, kScheduled, kDeployed, kRunning, kFinished, kAborted, kFailed };

std::string_view JobStateName(JobState state);
std::optional<JobState> ParseJobState(std::string_view name);
bool IsTerminal(JobState state);

enum class Messaging { kRelay, kDirect };
std::string_view MessagingName(Messaging m);

struct BridgeConfig {
  // 0 keeps the LGS in-process; otherwise a loopback TCP port for the guest
  // node to dial (-1 picks an ephemeral port).
  int lgs_port = 0;
  // When set, no guest node is started in the client worker.
  bool external_nodes = false;
};

struct JobSpec {
  std::string job_id;
  std::string app_ref;
  int min_sites = 1;
  std::optional<std::vector<std::string>> site_filter;
  std::map<std::string, int> resources;  // "*" sets the default (1)
  Messaging messaging = Messaging::kRelay;
  reliable::Timeouts reliable;
  uint64_t seed = 0;
  bool tracking = true;
  BridgeConfig bridge;

  int SlotsOn(const std::string& site) const;
};

// [A-Za-z0-9._-]{1,64}, not "." or "..".
bool IsValidJobId(std::string_view id);

// Strict parse of job.json. `default_messaging` applies when the key is
// absent. Throws Error(kInvalidConfig).
JobSpec ParseJobSpec(const nlohmann::json& j, Messaging default_messaging = Messaging::kRelay);
JobSpec LoadJobSpec(const std::filesystem::path& path,
                    Messaging default_messaging = Messaging::kRelay);
nlohmann::json JobSpecToJson(const JobSpec& spec);

struct JobStatus {
  std::string job_id;
  JobState state = JobState::kSubmitted;
  std::map<std::string, std::string> per_site;
  std::vector<std::string> participants;
  int64_t submitted_t = 0;
  std::optional<int64_t> started_t;
  std::optional<int64_t> ended_t;
  std::optional<std::string> failure_reason;

  bool operator==(const JobStatus&) const = default;
};

nlohmann::json JobStatusToJson(const JobStatus& status);
JobStatus JobStatusFromJson(const nlohmann::json& j);

}  // namespace fedbridge::runtime

#endif  // FEDBRIDGE_RUNTIME_JOB_H_
