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

#include "fedbridge/runtime/client.h"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "fedbridge/error.h"
#include "fedbridge/guestfl/app_config.h"

namespace fedbridge::runtime {
namespace {

using nlohmann::json;
using wire::MessageKind;

void Earliest(std::optional<int64_t>& acc, std::optional<int64_t> t) {
  if (t && (!acc || *t < *acc)) acc = t;
}

}  // namespace

ClientProcess::ClientProcess(ClientOptions options, LinkLayer* links)
    : Process(options.site, links),
      options_(std::move(options)),
      ids_(guestfl::SplitMix64(options_.seed ^ guestfl::Fnv1a("ccp/" + options_.site))) {
  control_ = std::make_unique<reliable::Endpoint>(
      control_address(), &ids_, [this](const wire::Envelope& env) { return Route(env); });
  control_->Serve([this](const wire::Envelope& req, reliable::Endpoint::Completion done) {
    HandleControl(req, std::move(done));
  });
}

ClientProcess::~ClientProcess() = default;

std::pair<wire::SiteAddress, wire::SiteAddress> ClientProcess::ControlHop(
    const wire::SiteAddress&) const {
  return {control_address(), wire::SiteAddress::Server()};
}

ClientWorker* ClientProcess::worker(const std::string& job_id) {
  auto it = workers_.find(job_id);
  return it == workers_.end() ? nullptr : it->second.get();
}

void ClientProcess::HandleControl(const wire::Envelope& req,
                                  reliable::Endpoint::Completion done) {
  if (req.kind == MessageKind::kDeploy) return Deploy(req, std::move(done));
  json j = json::parse(req.payload, nullptr, false);
  const std::string job_id =
      j.is_object() && j.contains("job") && j["job"].is_string() ? j["job"].get<std::string>()
                                                                   : req.job_id;
  if (req.kind == MessageKind::kStatus && j.is_object() && j.value("op", "") == "start") {
    ClientWorker* w = worker(job_id);
    if (!w) return done(false, "no worker for job " + job_id);
    w->Start(now_);
    return done(true, "started");
  }
  if (req.kind == MessageKind::kAbort) {
    stopped_jobs_.insert(job_id);
    ClientWorker* w = worker(job_id);
    if (!w) return done(true, "no worker");
    w->Stop(now_);
    int64_t drain = options_.stop_drain_ms;
    if (auto t = timeouts_.find(job_id); t != timeouts_.end()) {
      drain = std::min(drain, t->second.send_deadline_ms);
    }
    stops_.push_back({job_id, std::move(done), now_ + drain});
    return;
  }
  done(false, "unsupported request " + std::string(wire::KindName(req.kind)));
}

void ClientProcess::Deploy(const wire::Envelope& req, reliable::Endpoint::Completion done) {
  Deployment d;
  try {
    d = Deployment::FromJson(req.payload);
  } catch (const Error& e) {
    return done(false, e.what());
  }
  const std::string job_id = d.spec.job_id;
  if (stopped_jobs_.count(job_id)) return done(false, "job " + job_id + " was aborted");
  if (std::find(d.participants.begin(), d.participants.end(), site_) == d.participants.end()) {
    return done(false, "site " + site_ + " is not a participant");
  }
  if (ClientWorker* w = worker(job_id)) {
    return done(true, json{{"lgs_port", w->lgs_port()}}.dump());
  }
  timeouts_[job_id] = d.spec.reliable;
  std::unique_ptr<ClientWorker> w;
  try {
    w = std::make_unique<ClientWorker>(
        site_, std::move(d), options_.runs_dir,
        [this](const wire::Envelope& env) { return Route(env); },
        [this, job_id](const std::string& reason, bool peer_fault) {
          reports_.push_back({job_id, reason, peer_fault});
        });
  } catch (const Error& e) {
    return done(false, e.what());
  }
  ClientWorker& ref = *w;
  workers_[job_id] = std::move(w);
  if (on_deploy_) on_deploy_(ref);
  done(true, json{{"lgs_port", ref.lgs_port()}}.dump());
}

void ClientProcess::OnEnvelope(const wire::Envelope& env, int64_t now) {
  now_ = std::max(now_, now);
  if (env.dst.is_control()) {
    control_->OnEnvelope(env, now_);
    return;
  }
  if (env.dst.worker != env.job_id) {
    ++stats_.isolation_drops;
    return;
  }
  ClientWorker* w = worker(env.job_id);
  if (!w) {
    ++stats_.no_worker;
    return;
  }
  w->OnEnvelope(env, now_);
}

void ClientProcess::SendHeartbeat() {
  wire::Envelope hb;
  hb.msg_id = ids_.Next();
  hb.src = control_address();
  hb.dst = wire::SiteAddress::Server();
  hb.kind = MessageKind::kHeartbeat;
  json jobs = json::array();
  for (const auto& [id, w] : workers_) jobs.push_back(id);
  hb.payload = json{{"jobs", jobs}}.dump();
  Route(hb);
  ++heartbeats_sent_;
}

void ClientProcess::SendReports() {
  while (!reports_.empty()) {
    Report r = std::move(reports_.front());
    reports_.pop_front();
    ClientWorker* w = worker(r.job_id);
    if (!w || w->stopped()) continue;
    w->Stop(now_);
    json payload{{"op", "report"},       {"job", r.job_id},  {"site", site_},
                 {"peer_fault", r.peer_fault}, {"reason", r.reason}};
    control_->Call(wire::SiteAddress::Server(), MessageKind::kStatus, r.job_id, payload.dump(),
                   timeouts_[r.job_id], now_, [](const reliable::CallOutcome&) {});
  }
}

void ClientProcess::FinishStops() {
  std::vector<PendingStop> still;
  std::set<std::string> completed;
  for (auto& s : stops_) {
    ClientWorker* w = worker(s.job_id);
    if (w && !w->drained() && now_ < s.deadline) {
      still.push_back(std::move(s));
      continue;
    }
    s.done(true, !w || w->drained() ? "stopped" : "stopped with undelivered metrics");
    completed.insert(s.job_id);
  }
  stops_ = std::move(still);
  for (const auto& id : completed) {
    bool pending = std::any_of(stops_.begin(), stops_.end(),
                               [&](const PendingStop& s) { return s.job_id == id; });
    auto it = workers_.find(id);
    if (pending || it == workers_.end()) continue;
    if (on_retire_) on_retire_(*it->second);
    graveyard_.push_back(std::move(it->second));
    workers_.erase(it);
  }
}

void ClientProcess::Tick(int64_t now) {
  now_ = std::max(now_, now);
  graveyard_.clear();
  DrainLocal(now_);
  if (now_ >= next_heartbeat_) {
    SendHeartbeat();
    next_heartbeat_ = now_ + options_.heartbeat_ms;
  }
  control_->Tick(now_);
  for (auto& [id, w] : workers_) w->Tick(now_);
  SendReports();
  FinishStops();
}

std::optional<int64_t> ClientProcess::NextWakeup() const {
  if (has_local() || !reports_.empty()) return now_;
  std::optional<int64_t> next = control_->NextWakeup();
  Earliest(next, next_heartbeat_);
  for (const auto& [id, w] : workers_) Earliest(next, w->NextWakeup());
  for (const auto& s : stops_) {
    auto it = workers_.find(s.job_id);
    if (it == workers_.end() || it->second->drained()) return now_;
    Earliest(next, s.deadline);
  }
  return next;
}

}  // namespace fedbridge::runtime
