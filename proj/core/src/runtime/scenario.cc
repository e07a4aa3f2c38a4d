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

#include "fedbridge/runtime/scenario.h"

#include <fstream>
#include <set>

#include "fedbridge/error.h"

namespace fedbridge::runtime {
namespace {

using nlohmann::json;

[[noreturn]] void Bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, "scenario." + key + ": " + why);
}

void RejectUnknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, v] : j.items()) {
    if (!known.count(key)) Bad(where + key, "unknown key");
  }
}

int64_t Int(const json& j, const std::string& key, const std::string& where, int64_t lo) {
  if (!j[key].is_number_integer() || j[key].get<int64_t>() < lo) {
    Bad(where + key, "expected an integer >= " + std::to_string(lo));
  }
  return j[key].get<int64_t>();
}

double Prob(const json& j, const std::string& key, const std::string& where) {
  if (!j[key].is_number() || j[key].get<double>() < 0 || j[key].get<double>() > 1) {
    Bad(where + key, "expected a probability in [0, 1]");
  }
  return j[key].get<double>();
}

netsim::LinkPolicy ParsePolicy(const json& j, const std::string& where,
                               const netsim::LinkPolicy& base) {
  if (!j.is_object()) Bad(where, "expected a link policy object");
  RejectUnknown(j, {"drop_prob", "dup_prob", "latency_min_ms", "latency_max_ms", "seed"},
                where + ".");
  netsim::LinkPolicy p = base;
  p.seed = 0;
  if (j.contains("drop_prob")) p.drop_prob = Prob(j, "drop_prob", where + ".");
  if (j.contains("dup_prob")) p.dup_prob = Prob(j, "dup_prob", where + ".");
  if (j.contains("latency_min_ms")) p.latency_min_ms = Int(j, "latency_min_ms", where + ".", 0);
  if (j.contains("latency_max_ms")) p.latency_max_ms = Int(j, "latency_max_ms", where + ".", 0);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() &&
        !(j["seed"].is_number_integer() && j["seed"].get<int64_t>() >= 0)) {
      Bad(where + ".seed", "expected a non-negative integer");
    }
    p.seed = j["seed"].get<uint64_t>();
  }
  if (p.latency_max_ms < p.latency_min_ms) Bad(where, "latency_max_ms < latency_min_ms");
  return p;
}

FaultEvent ParseEvent(const json& j, const std::string& where,
                      const std::set<std::string>& sites) {
  if (!j.is_object()) Bad(where, "expected an object");
  RejectUnknown(j, {"t_ms", "action", "site", "path", "direction", "job"}, where + ".");
  FaultEvent e;
  if (!j.contains("t_ms")) Bad(where + ".t_ms", "required");
  e.t_ms = Int(j, "t_ms", where + ".", 0);
  const std::string action = j.value("action", "");
  if (action == "partition") {
    e.action = FaultAction::kPartition;
  } else if (action == "heal") {
    e.action = FaultAction::kHeal;
  } else if (action == "abort") {
    e.action = FaultAction::kAbort;
  } else {
    Bad(where + ".action", "expected partition, heal or abort");
  }
  if (j.contains("job")) {
    if (!j["job"].is_string()) Bad(where + ".job", "expected a string");
    e.job = j["job"].get<std::string>();
  }
  if (e.action == FaultAction::kAbort) {
    if (e.job.empty()) Bad(where + ".job", "abort needs a job");
    return e;
  }
  e.site = j.value("site", "");
  if (!sites.count(e.site)) Bad(where + ".site", "unknown site '" + e.site + "'");
  const std::string path = j.value("path", "control");
  if (path == "control") {
    e.path = LinkPath::kControl;
  } else if (path == "direct") {
    e.path = LinkPath::kDirect;
    if (e.job.empty()) Bad(where + ".job", "direct-link events need a job");
  } else {
    Bad(where + ".path", "expected control or direct");
  }
  const std::string dir = j.value("direction", "both");
  if (dir == "both") {
    e.direction = LinkDirection::kBoth;
  } else if (dir == "to_server") {
    e.direction = LinkDirection::kToServer;
  } else if (dir == "from_server") {
    e.direction = LinkDirection::kFromServer;
  } else {
    Bad(where + ".direction", "expected both, to_server or from_server");
  }
  return e;
}

}  // namespace

netsim::LinkPolicy ScenarioConfig::LinkFor(const std::string& site) const {
  auto it = links.find(site);
  netsim::LinkPolicy p = it == links.end() ? default_link : it->second;
  if (p.seed == 0) p.seed = guestfl::SplitMix64(seed ^ guestfl::Fnv1a("link/" + site));
  return p;
}

netsim::LinkPolicy ScenarioConfig::DirectLinkFor(const std::string& site,
                                                 const std::string& job) const {
  netsim::LinkPolicy p = direct_link ? *direct_link : LinkFor(site);
  p.seed = guestfl::SplitMix64((direct_link && direct_link->seed ? direct_link->seed : seed) ^
                               guestfl::Fnv1a("direct/" + job + "/" + site));
  return p;
}

const SiteConfig* ScenarioConfig::FindSite(const std::string& name) const {
  for (const auto& s : sites) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + " is not valid JSON");
  }
  return j;
}

ScenarioConfig ParseScenario(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) Bad("", "scenario must be a JSON object");
  RejectUnknown(j,
                {"seed", "sites", "links", "direct_link", "messaging", "allow_direct", "apps",
                 "heartbeat_ms", "missed_heartbeats", "events", "time_limit_ms", "runs_dir",
                 "server"},
                "");
  ScenarioConfig s;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() &&
        !(j["seed"].is_number_integer() && j["seed"].get<int64_t>() >= 0)) {
      Bad("seed", "expected a non-negative integer");
    }
    s.seed = j["seed"].get<uint64_t>();
  }
  if (!j.contains("sites") || !j["sites"].is_array() || j["sites"].empty()) {
    Bad("sites", "expected a nonempty list");
  }
  std::set<std::string> names;
  for (size_t i = 0; i < j["sites"].size(); ++i) {
    const json& e = j["sites"][i];
    const std::string where = "sites[" + std::to_string(i) + "]";
    if (!e.is_object()) Bad(where, "expected {name, slots}");
    RejectUnknown(e, {"name", "slots"}, where + ".");
    SiteConfig site;
    site.name = e.value("name", "");
    if (!wire::IsValidSiteName(site.name)) Bad(where + ".name", "invalid site name");
    if (site.name == wire::kServerSite) Bad(where + ".name", "\"server\" is reserved");
    if (!names.insert(site.name).second) Bad(where + ".name", "duplicate site " + site.name);
    if (e.contains("slots")) site.slots = static_cast<int>(Int(e, "slots", where + ".", 1));
    s.sites.push_back(site);
  }
  if (j.contains("links")) {
    if (!j["links"].is_object()) Bad("links", "expected an object");
    if (j["links"].contains("default")) {
      s.default_link = ParsePolicy(j["links"]["default"], "links.default", {});
    }
    for (const auto& [name, p] : j["links"].items()) {
      if (name == "default") continue;
      if (!names.count(name)) Bad("links." + name, "unknown site");
      s.links[name] = ParsePolicy(p, "links." + name, s.default_link);
    }
  }
  if (j.contains("direct_link")) s.direct_link = ParsePolicy(j["direct_link"], "direct_link", {});
  if (j.contains("messaging")) {
    const std::string m = j["messaging"].is_string() ? j["messaging"].get<std::string>() : "";
    if (m == "relay") {
      s.messaging = Messaging::kRelay;
    } else if (m == "direct") {
      s.messaging = Messaging::kDirect;
    } else {
      Bad("messaging", "expected relay or direct");
    }
  }
  if (j.contains("allow_direct")) {
    if (!j["allow_direct"].is_boolean()) Bad("allow_direct", "expected a boolean");
    s.allow_direct = j["allow_direct"].get<bool>();
  }
  if (j.contains("apps")) {
    if (!j["apps"].is_object()) Bad("apps", "expected an object name -> app dir or app.json");
    for (const auto& [name, a] : j["apps"].items()) {
      if (a.is_object()) {
        s.apps[name] = guestfl::ParseAppConfig(a);
      } else if (a.is_string()) {
        std::filesystem::path p = base_dir / a.get<std::string>();
        if (std::filesystem::is_directory(p)) p /= "app.json";
        s.apps[name] = guestfl::LoadAppConfig(p);
      } else {
        Bad("apps." + name, "expected a path or an inline app config");
      }
    }
  }
  if (j.contains("heartbeat_ms")) s.heartbeat_ms = Int(j, "heartbeat_ms", "", 1);
  if (j.contains("missed_heartbeats")) {
    s.missed_heartbeats = static_cast<int>(Int(j, "missed_heartbeats", "", 1));
  }
  if (j.contains("events")) {
    if (!j["events"].is_array()) Bad("events", "expected a list");
    for (size_t i = 0; i < j["events"].size(); ++i) {
      s.events.push_back(ParseEvent(j["events"][i], "events[" + std::to_string(i) + "]", names));
    }
  }
  if (j.contains("time_limit_ms")) s.time_limit_ms = Int(j, "time_limit_ms", "", 1);
  s.runs_dir = base_dir / "runs";
  if (j.contains("runs_dir")) {
    if (!j["runs_dir"].is_string()) Bad("runs_dir", "expected a path");
    s.runs_dir = base_dir / j["runs_dir"].get<std::string>();
  }
  if (j.contains("server")) {
    const json& srv = j["server"];
    if (!srv.is_object()) Bad("server", "expected {host, port}");
    RejectUnknown(srv, {"host", "port"}, "server.");
    if (srv.contains("host")) {
      if (!srv["host"].is_string()) Bad("server.host", "expected a string");
      s.server_host = srv["host"].get<std::string>();
    }
    if (srv.contains("port")) {
      s.server_port = static_cast<int>(Int(srv, "port", "server.", 0));
      if (s.server_port > 65535) Bad("server.port", "out of range");
    }
  }
  return s;
}

ScenarioConfig LoadScenario(const std::filesystem::path& path) {
  return ParseScenario(ReadJsonFile(path), path.parent_path());
}

}  // namespace fedbridge::runtime
