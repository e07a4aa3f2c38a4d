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

#include "fedbridge/runtime/job.h"

#include <set>

#include "fedbridge/error.h"
#include "fedbridge/runtime/scenario.h"
#include "fedbridge/wire/envelope.h"

namespace fedbridge::runtime {
namespace {

using nlohmann::json;

[[noreturn]] void Bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, "job." + key + ": " + why);
}

void RejectUnknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, v] : j.items()) {
    if (!known.count(key)) Bad(where + key, "unknown key");
  }
}

int64_t PositiveInt(const json& j, const std::string& key, const std::string& where) {
  if (!j[key].is_number_integer() || j[key].get<int64_t>() < 1) {
    Bad(where + key, "expected a positive integer");
  }
  return j[key].get<int64_t>();
}

}  // namespace

std::string_view JobStateName(JobState state) {
  switch (state) {
    case JobState::kSubmitted: return "SUBMITTED";
    case JobState::kScheduled: return "SCHEDULED";
    case JobState::kDeployed: return "DEPLOYED";
    case JobState::kRunning: return "RUNNING";
    case JobState::kFinished: return "FINISHED";
    case JobState::kAborted: return "ABORTED";
    case JobState::kFailed: return "FAILED";
  }
  return "?";
}

std::optional<JobState> ParseJobState(std::string_view name) {
  for (auto s : {JobState::kSubmitted, JobState::kScheduled, JobState::kDeployed,
                 JobState::kRunning, JobState::kFinished, JobState::kAborted,
                 JobState::kFailed}) {
    if (JobStateName(s) == name) return s;
  }
  return std::nullopt;
}

bool IsTerminal(JobState state) {
  return state == JobState::kFinished || state == JobState::kAborted ||
         state == JobState::kFailed;
}

std::string_view MessagingName(Messaging m) {
  return m == Messaging::kRelay ? "relay" : "direct";
}

int JobSpec::SlotsOn(const std::string& site) const {
  if (auto it = resources.find(site); it != resources.end()) return it->second;
  if (auto it = resources.find("*"); it != resources.end()) return it->second;
  return 1;
}

bool IsValidJobId(std::string_view id) {
  if (id.empty() || id.size() > wire::kMaxJobIdBytes || id == "." || id == "..") return false;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

JobSpec ParseJobSpec(const json& j, Messaging default_messaging) {
  if (!j.is_object()) Bad("", "job spec must be a JSON object");
  RejectUnknown(j,
                {"job_id", "app_ref", "min_sites", "site_filter", "resources", "messaging",
                 "reliable", "seed", "tracking", "bridge"},
                "");
  JobSpec spec;
  spec.messaging = default_messaging;
  if (!j.contains("job_id") || !j["job_id"].is_string()) Bad("job_id", "required string");
  spec.job_id = j["job_id"].get<std::string>();
  if (!IsValidJobId(spec.job_id)) Bad("job_id", "must match [A-Za-z0-9._-]{1,64}");
  if (!j.contains("app_ref") || !j["app_ref"].is_string()) Bad("app_ref", "required string");
  spec.app_ref = j["app_ref"].get<std::string>();
  if (j.contains("min_sites")) spec.min_sites = static_cast<int>(PositiveInt(j, "min_sites", ""));
  if (j.contains("site_filter")) {
    if (!j["site_filter"].is_array()) Bad("site_filter", "expected a list of site names");
    std::vector<std::string> sites;
    for (const auto& s : j["site_filter"]) {
      if (!s.is_string() || !wire::IsValidSiteName(s.get<std::string>())) {
        Bad("site_filter", "invalid site name");
      }
      sites.push_back(s.get<std::string>());
    }
    spec.site_filter = std::move(sites);
  }
  if (j.contains("resources")) {
    if (!j["resources"].is_object()) Bad("resources", "expected an object site -> slots");
    for (const auto& [site, n] : j["resources"].items()) {
      if (!n.is_number_integer() || n.get<int64_t>() < 1) {
        Bad("resources." + site, "expected a positive integer");
      }
      spec.resources[site] = n.get<int>();
    }
  }
  if (j.contains("messaging")) {
    std::string m = j["messaging"].is_string() ? j["messaging"].get<std::string>() : "";
    if (m == "relay") {
      spec.messaging = Messaging::kRelay;
    } else if (m == "direct") {
      spec.messaging = Messaging::kDirect;
    } else {
      Bad("messaging", "expected \"relay\" or \"direct\"");
    }
  }
  if (j.contains("reliable")) {
    const json& r = j["reliable"];
    if (!r.is_object()) Bad("reliable", "expected an object");
    RejectUnknown(r, {"retry_ms", "query_ms", "send_deadline_ms", "result_deadline_ms"},
                  "reliable.");
    if (r.contains("retry_ms")) spec.reliable.retry_ms = PositiveInt(r, "retry_ms", "reliable.");
    if (r.contains("query_ms")) spec.reliable.query_ms = PositiveInt(r, "query_ms", "reliable.");
    if (r.contains("send_deadline_ms")) {
      spec.reliable.send_deadline_ms = PositiveInt(r, "send_deadline_ms", "reliable.");
    }
    if (r.contains("result_deadline_ms")) {
      spec.reliable.result_deadline_ms = PositiveInt(r, "result_deadline_ms", "reliable.");
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() &&
        !(j["seed"].is_number_integer() && j["seed"].get<int64_t>() >= 0)) {
      Bad("seed", "expected a non-negative integer");
    }
    spec.seed = j["seed"].get<uint64_t>();
  }
  if (j.contains("tracking")) {
    if (!j["tracking"].is_boolean()) Bad("tracking", "expected true or false");
    spec.tracking = j["tracking"].get<bool>();
  }
  if (j.contains("bridge")) {
    const json& b = j["bridge"];
    if (!b.is_object()) Bad("bridge", "expected an object");
    RejectUnknown(b, {"lgs_port", "external_nodes"}, "bridge.");
    if (b.contains("lgs_port")) {
      if (!b["lgs_port"].is_number_integer() || b["lgs_port"].get<int64_t>() < -1 ||
          b["lgs_port"].get<int64_t>() > 65535) {
        Bad("bridge.lgs_port", "expected -1, 0 or a port number");
      }
      spec.bridge.lgs_port = b["lgs_port"].get<int>();
    }
    if (b.contains("external_nodes")) {
      if (!b["external_nodes"].is_boolean()) Bad("bridge.external_nodes", "expected a boolean");
      spec.bridge.external_nodes = b["external_nodes"].get<bool>();
    }
    if (spec.bridge.external_nodes && spec.bridge.lgs_port == 0) {
      Bad("bridge.lgs_port", "external guest nodes need a TCP port (-1 for ephemeral)");
    }
  }
  return spec;
}

JobSpec LoadJobSpec(const std::filesystem::path& path, Messaging default_messaging) {
  return ParseJobSpec(ReadJsonFile(path), default_messaging);
}

json JobSpecToJson(const JobSpec& spec) {
  nlohmann::ordered_json j;
  j["job_id"] = spec.job_id;
  j["app_ref"] = spec.app_ref;
  j["min_sites"] = spec.min_sites;
  if (spec.site_filter) j["site_filter"] = *spec.site_filter;
  j["resources"] = spec.resources;
  j["messaging"] = MessagingName(spec.messaging);
  j["reliable"] = {{"retry_ms", spec.reliable.retry_ms},
                   {"query_ms", spec.reliable.query_ms},
                   {"send_deadline_ms", spec.reliable.send_deadline_ms},
                   {"result_deadline_ms", spec.reliable.result_deadline_ms}};
  j["seed"] = spec.seed;
  j["tracking"] = spec.tracking;
  j["bridge"] = {{"lgs_port", spec.bridge.lgs_port},
                 {"external_nodes", spec.bridge.external_nodes}};
  return j;
}

json JobStatusToJson(const JobStatus& s) {
  nlohmann::ordered_json j;
  j["job_id"] = s.job_id;
  j["state"] = JobStateName(s.state);
  j["participants"] = s.participants;
  j["per_site"] = s.per_site;
  j["submitted_t"] = s.submitted_t;
  j["started_t"] = s.started_t ? json(*s.started_t) : json(nullptr);
  j["ended_t"] = s.ended_t ? json(*s.ended_t) : json(nullptr);
  j["failure_reason"] = s.failure_reason ? json(*s.failure_reason) : json(nullptr);
  return j;
}

JobStatus JobStatusFromJson(const json& j) {
  try {
    JobStatus s;
    s.job_id = j.at("job_id").get<std::string>();
    auto state = ParseJobState(j.at("state").get<std::string>());
    if (!state) throw Error(ErrorCode::kMalformed, "unknown job state");
    s.state = *state;
    s.participants = j.at("participants").get<std::vector<std::string>>();
    s.per_site = j.at("per_site").get<std::map<std::string, std::string>>();
    s.submitted_t = j.at("submitted_t").get<int64_t>();
    if (!j.at("started_t").is_null()) s.started_t = j["started_t"].get<int64_t>();
    if (!j.at("ended_t").is_null()) s.ended_t = j["ended_t"].get<int64_t>();
    if (!j.at("failure_reason").is_null()) s.failure_reason = j["failure_reason"].get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("job status: ") + e.what());
  }
}

}  // namespace fedbridge::runtime
