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

#include "fedbridge/runtime/server.h"

#include <algorithm>
#include <fstream>

#include "fedbridge/error.h"
#include "fedbridge/guestfl/protocol.h"

namespace fedbridge::runtime {
namespace {

using nlohmann::json;
using wire::MessageKind;

void Earliest(std::optional<int64_t>& acc, std::optional<int64_t> t) {
  if (t && (!acc || *t < *acc)) acc = t;
}

std::string Joined(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

ServerOptions ServerOptions::FromScenario(const ScenarioConfig& scenario) {
  ServerOptions o;
  o.sites = scenario.sites;
  o.apps = scenario.apps;
  o.allow_direct = scenario.allow_direct;
  o.heartbeat_ms = scenario.heartbeat_ms;
  o.missed_heartbeats = scenario.missed_heartbeats;
  o.runs_dir = scenario.runs_dir;
  o.seed = scenario.seed;
  return o;
}

std::string MakeSubmitPayload(const JobSpec& spec, const guestfl::AppConfig* app) {
  json j;
  j["job"] = JobSpecToJson(spec);
  if (app) j["app"] = guestfl::AppConfigToJson(*app);
  return j.dump();
}

std::string MakeStatusQuery(const std::string& job_id) {
  return json{{"op", "get"}, {"job", job_id}}.dump();
}

std::string MakeListQuery() { return json{{"op", "list"}}.dump(); }

std::string MakeEventsQuery(const std::string& job_id) {
  return json{{"op", "events"}, {"job", job_id}}.dump();
}

json TransitionToJson(const Transition& t) {
  json e;
  e["t_ms"] = t.t_ms;
  e["job_id"] = t.job_id;
  e["from"] = t.from ? json(JobStateName(*t.from)) : json(nullptr);
  e["to"] = JobStateName(t.to);
  e["reason"] = t.reason;
  return e;
}

Transition TransitionFromJson(const json& j) {
  auto state = [](const json& v) {
    auto s = ParseJobState(v.get<std::string>());
    if (!s) throw Error(ErrorCode::kMalformed, "unknown job state " + v.dump());
    return *s;
  };
  Transition t;
  t.t_ms = j.at("t_ms").get<int64_t>();
  t.job_id = j.at("job_id").get<std::string>();
  if (!j.at("from").is_null()) t.from = state(j["from"]);
  t.to = state(j.at("to"));
  t.reason = j.at("reason").get<std::string>();
  return t;
}

std::string MakeAbortPayload(const std::string& job_id, const std::string& reason) {
  return json{{"job", job_id}, {"reason", reason}}.dump();
}

ServerProcess::ServerProcess(ServerOptions options, LinkLayer* links)
    : Process(std::string(wire::kServerSite), links),
      options_(std::move(options)),
      ids_(guestfl::SplitMix64(options_.seed ^ guestfl::Fnv1a("scp"))) {
  control_ = std::make_unique<reliable::Endpoint>(
      control_address(), &ids_, [this](const wire::Envelope& env) { return Route(env); });
  control_->Serve([this](const wire::Envelope& req, reliable::Endpoint::Completion done) {
    HandleControl(req, std::move(done));
  });
  for (const auto& s : options_.sites) {
    slots_.SetCapacity(s.name, s.slots);
    known_sites_.insert(s.name);
  }
}

ServerProcess::~ServerProcess() = default;

std::pair<wire::SiteAddress, wire::SiteAddress> ServerProcess::ControlHop(
    const wire::SiteAddress& dst) const {
  return {wire::SiteAddress::Server(), wire::SiteAddress::Control(dst.site)};
}

JobStatus ServerProcess::Submit(const JobSpec& spec, const guestfl::AppConfig* app) {
  if (!IsValidJobId(spec.job_id)) {
    throw Error(ErrorCode::kInvalidConfig, "invalid job_id '" + spec.job_id + "'");
  }
  if (jobs_.count(spec.job_id)) {
    throw Error(ErrorCode::kDuplicateJobId, "job " + spec.job_id + " already exists");
  }
  guestfl::AppConfig config;
  if (app) {
    config = *app;
  } else {
    auto it = options_.apps.find(spec.app_ref);
    if (it == options_.apps.end()) {
      throw Error(ErrorCode::kUnknownApp, "no app registered as '" + spec.app_ref + "'");
    }
    config = it->second;
  }
  if (spec.messaging == Messaging::kDirect && !options_.allow_direct) {
    throw Error(ErrorCode::kDirectNotPermitted, "network policy forbids direct messaging");
  }
  spec.reliable.Validate();

  PendingJob pending;
  pending.job_id = spec.job_id;
  pending.min_sites = std::max(spec.min_sites, config.min_clients);
  std::set<std::string> filter;
  if (spec.site_filter) filter.insert(spec.site_filter->begin(), spec.site_filter->end());
  for (const auto& site : known_sites_) {
    if (spec.site_filter && !filter.count(site)) continue;
    if (slots_.capacity(site) < spec.SlotsOn(site)) continue;
    pending.candidates.push_back(site);
    pending.need[site] = spec.SlotsOn(site);
  }
  if (static_cast<int>(pending.candidates.size()) < pending.min_sites) {
    throw Error(ErrorCode::kNeverSchedulable,
                "only " + std::to_string(pending.candidates.size()) +
                    " eligible site(s) for min_sites " + std::to_string(pending.min_sites));
  }

  Job& job = jobs_[spec.job_id];
  job.spec = spec;
  job.app = std::move(config);
  job.status.job_id = spec.job_id;
  job.status.submitted_t = now_;
  if (!options_.runs_dir.empty()) {
    std::filesystem::create_directories(options_.runs_dir / spec.job_id);
    std::ofstream(options_.runs_dir / spec.job_id / "events.jsonl", std::ios::trunc);
  }
  SetState(job, JobState::kSubmitted, "submitted");
  queue_.push_back(std::move(pending));
  Schedule();
  return job.status;
}

JobStatus ServerProcess::Abort(const std::string& job_id, const std::string& reason) {
  Job* job = Find(job_id);
  if (!job) throw Error(ErrorCode::kUnknownJob, "no job " + job_id);
  if (!IsTerminal(job->status.state)) {
    Terminate(*job, JobState::kAborted, reason.empty() ? "aborted by operator" : reason);
  }
  return job->status;
}

JobStatus ServerProcess::Status(const std::string& job_id) const { return Get(job_id).status; }

std::vector<JobStatus> ServerProcess::List() const {
  std::vector<JobStatus> out;
  for (const auto& [id, job] : jobs_) out.push_back(job.status);
  return out;
}

ServerWorker* ServerProcess::worker(const std::string& job_id) {
  Job* job = Find(job_id);
  return job ? job->worker.get() : nullptr;
}

const tracking::MetricSink* ServerProcess::sink(const std::string& job_id) const {
  auto it = sinks_.find(job_id);
  return it == sinks_.end() ? nullptr : it->second.get();
}

ServerProcess::Job* ServerProcess::Find(const std::string& job_id) {
  auto it = jobs_.find(job_id);
  return it == jobs_.end() ? nullptr : &it->second;
}

const ServerProcess::Job& ServerProcess::Get(const std::string& job_id) const {
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::kUnknownJob, "no job " + job_id);
  return it->second;
}

bool ServerProcess::IsNetworkLive(const Job& job) const {
  return job.status.state == JobState::kDeployed || job.status.state == JobState::kRunning;
}

void ServerProcess::HandleControl(const wire::Envelope& req,
                                  reliable::Endpoint::Completion done) {
  try {
    switch (req.kind) {
      case MessageKind::kSubmit: {
        json j = json::parse(req.payload, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("job")) {
          throw Error(ErrorCode::kInvalidConfig, "SUBMIT payload needs a job");
        }
        JobSpec spec = ParseJobSpec(j["job"]);
        std::optional<guestfl::AppConfig> app;
        if (j.contains("app")) app = guestfl::ParseAppConfig(j["app"]);
        JobStatus status = Submit(spec, app ? &*app : nullptr);
        return done(true, JobStatusToJson(status).dump());
      }
      case MessageKind::kStatus:
        return HandleStatus(req, done);
      case MessageKind::kAbort: {
        json j = json::parse(req.payload, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("job") || !j["job"].is_string()) {
          throw Error(ErrorCode::kInvalidConfig, "ABORT payload needs a job");
        }
        JobStatus status = Abort(j["job"].get<std::string>(), j.value("reason", ""));
        return done(true, JobStatusToJson(status).dump());
      }
      default:
        return done(false, "unsupported control request " + std::string(wire::KindName(req.kind)));
    }
  } catch (const Error& e) {
    done(false, e.what());
  } catch (const std::exception& e) {
    done(false, std::string("InvalidConfig: ") + e.what());
  }
}

void ServerProcess::HandleStatus(const wire::Envelope& req, reliable::Endpoint::Completion done) {
  json j = json::parse(req.payload, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kInvalidConfig, "STATUS payload must be an object");
  }
  const std::string op = j.value("op", "");
  if (op == "get") {
    return done(true, JobStatusToJson(Status(j.value("job", ""))).dump());
  }
  if (op == "events") {
    const std::string id = j.value("job", "");
    Status(id);
    json out = json::array();
    for (const auto& t : transitions_) {
      if (t.job_id == id) out.push_back(TransitionToJson(t));
    }
    return done(true, out.dump());
  }
  if (op == "list") {
    json out = json::array();
    for (const auto& s : List()) out.push_back(JobStatusToJson(s));
    return done(true, out.dump());
  }
  if (op == "report") {
    const std::string site = j.value("site", "");
    Job* job = Find(j.value("job", ""));
    if (job && !IsTerminal(job->status.state) && site == req.src.site &&
        job->status.per_site.count(site)) {
      const bool peer_fault = j.value("peer_fault", false);
      Terminate(*job, peer_fault ? JobState::kFailed : JobState::kAborted,
                "site " + site + ": " + j.value("reason", "worker failed"));
    }
    return done(true, "ok");
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown STATUS op '" + op + "'");
}

void ServerProcess::OnEnvelope(const wire::Envelope& env, int64_t now) {
  now_ = std::max(now_, now);
  if (known_sites_.count(env.src.site)) {
    last_seen_[env.src.site] = now_;
    if (online_.insert(env.src.site).second) Schedule();
  }
  if (env.dst.site != site_) return Relay(env);
  if (env.kind == MessageKind::kHeartbeat) return;
  if (env.kind == MessageKind::kMetric && !env.dst.is_control()) return HandleMetric(env);
  if (env.dst.is_control()) {
    control_->OnEnvelope(env, now_);
    return;
  }
  DispatchToWorker(env);
}

void ServerProcess::Relay(const wire::Envelope& env) {
  const Job* job = Find(env.job_id);
  auto member = [&](const wire::SiteAddress& a) {
    return a.worker == env.job_id &&
           (a.site == site_ || (job && job->status.per_site.count(a.site)));
  };
  if (!job || !IsNetworkLive(*job) || !member(env.src) || !member(env.dst)) {
    ++stats_.relay_rejected;
    return;
  }
  ++stats_.relayed;
  ForwardOnControl(env);
}

void ServerProcess::DispatchToWorker(const wire::Envelope& env) {
  if (env.dst.worker != env.job_id) {
    ++stats_.isolation_drops;
    return;
  }
  Job* job = Find(env.job_id);
  if (!job || !job->worker) {
    ++stats_.no_worker;
    return;
  }
  job->worker->OnEnvelope(env, now_);
}

void ServerProcess::HandleMetric(const wire::Envelope& env) {
  if (env.dst.worker != env.job_id) {
    ++stats_.isolation_drops;
    return;
  }
  auto it = sinks_.find(env.job_id);
  if (it == sinks_.end()) {
    ++metric_unknown_job_;
    return;
  }
  std::vector<tracking::MetricRecord> records;
  try {
    records = tracking::DecodeBatch(env.payload);
  } catch (const Error&) {
    return;
  }
  std::erase_if(records, [&](const tracking::MetricRecord& r) { return r.site != env.src.site; });
  it->second->Append(records);
  Route(tracking::MakeMetricAck(env, &ids_));
}

void ServerProcess::Schedule() {
  for (const Admission& a : AdmitFifo(queue_, slots_, online_)) Admit(a);
}

void ServerProcess::Admit(const Admission& admission) {
  Job& job = jobs_.at(admission.job_id);
  job.status.participants = admission.participants;
  for (const auto& site : admission.participants) {
    job.reserved[site] = job.spec.SlotsOn(site);
    job.status.per_site[site] = "DEPLOYING";
  }
  SetState(job, JobState::kScheduled, "slots reserved on " + Joined(admission.participants));
  if (job.spec.tracking && !sinks_.count(job.spec.job_id)) {
    std::filesystem::path path;
    if (!options_.runs_dir.empty()) path = options_.runs_dir / job.spec.job_id / "metrics.jsonl";
    sinks_[job.spec.job_id] = std::make_unique<tracking::MetricSink>(job.spec.job_id, path);
  }
  Deployment d{job.spec, job.app, admission.participants};
  job.worker = std::make_unique<ServerWorker>(
      d, [this](const wire::Envelope& env) { return Route(env); });
  job.phase = Phase::kDeploying;
  CallSites(job, MessageKind::kDeploy, d.ToJson(), &ServerProcess::OnDeployed);
}

void ServerProcess::CallSites(
    Job& job, MessageKind kind, const std::string& payload,
    void (ServerProcess::*on_outcome)(const std::string&, const std::string&,
                                      const reliable::CallOutcome&)) {
  job.awaiting = std::set<std::string>(job.status.participants.begin(),
                                       job.status.participants.end());
  const std::string job_id = job.spec.job_id;
  for (const auto& site : job.status.participants) {
    control_->Call(wire::SiteAddress::Control(site), kind, job_id, payload, job.spec.reliable,
                   now_, [this, job_id, site, on_outcome](const reliable::CallOutcome& o) {
                     (this->*on_outcome)(job_id, site, o);
                   });
  }
}

void ServerProcess::FailCall(Job& job, std::string_view what, const std::string& site,
                             const reliable::CallOutcome& outcome) {
  const bool peer_fault = outcome.state == reliable::CallState::kDone;
  Terminate(job, peer_fault ? JobState::kFailed : JobState::kAborted,
            std::string(what) + " " + outcome.msg_id.ToHex() + " to " + site + ": " +
                outcome.Describe());
}

void ServerProcess::OnDeployed(const std::string& job_id, const std::string& site,
                               const reliable::CallOutcome& outcome) {
  Job* job = Find(job_id);
  if (!job || job->phase != Phase::kDeploying) return;
  if (!outcome.ok()) return FailCall(*job, "DEPLOY", site, outcome);
  job->status.per_site[site] = "READY";
  job->awaiting.erase(site);
  if (!job->awaiting.empty()) return WriteStatus(*job);
  SetState(*job, JobState::kDeployed, "all workers ready");
  if (job->spec.messaging == Messaging::kDirect) OpenDirectLinks(*job);
  job->phase = Phase::kStarting;
  CallSites(*job, MessageKind::kStatus, json{{"op", "start"}, {"job", job_id}}.dump(),
            &ServerProcess::OnStarted);
}

void ServerProcess::OnStarted(const std::string& job_id, const std::string& site,
                              const reliable::CallOutcome& outcome) {
  Job* job = Find(job_id);
  if (!job || job->phase != Phase::kStarting) return;
  if (!outcome.ok()) return FailCall(*job, "STATUS(start)", site, outcome);
  job->status.per_site[site] = "RUNNING";
  job->awaiting.erase(site);
  if (!job->awaiting.empty()) return WriteStatus(*job);
  job->phase = Phase::kRunning;
  job->status.started_t = now_;
  SetState(*job, JobState::kRunning, "all workers started");
}

void ServerProcess::BeginFinish(Job& job) {
  WriteHistory(job);
  job.phase = Phase::kFinishing;
  for (auto& [site, state] : job.status.per_site) state = "STOPPING";
  WriteStatus(job);
  CallSites(job, MessageKind::kAbort, MakeAbortPayload(job.spec.job_id, "finished"),
            &ServerProcess::OnStopped);
}

void ServerProcess::OnStopped(const std::string& job_id, const std::string& site,
                              const reliable::CallOutcome& outcome) {
  Job* job = Find(job_id);
  if (!job || job->phase != Phase::kFinishing) return;
  job->status.per_site[site] = outcome.ok() ? "STOPPED" : "UNREACHABLE";
  job->awaiting.erase(site);
  if (!job->awaiting.empty()) return WriteStatus(*job);
  const size_t rounds = job->worker ? job->worker->link().history().size() : 0;
  Terminate(*job, JobState::kFinished,
            "guest app finished after " + std::to_string(rounds) + " round(s)");
}

void ServerProcess::Terminate(Job& job, JobState state, const std::string& reason) {
  if (IsTerminal(job.status.state)) return;
  const Phase phase = job.phase;
  job.phase = Phase::kDone;
  if (phase == Phase::kQueued) {
    std::erase_if(queue_, [&](const PendingJob& p) { return p.job_id == job.spec.job_id; });
  }
  if (job.worker) {
    WriteHistory(job);
    job.worker->Stop(now_);
    graveyard_.push_back(std::move(job.worker));
  }
  CloseDirectLinks(job);
  for (const auto& [site, n] : job.reserved) slots_.Release(site, n);
  job.reserved.clear();
  job.status.ended_t = now_;
  if (state != JobState::kFinished) {
    job.status.failure_reason = reason;
    for (auto& [site, s] : job.status.per_site) s = "STOPPED";
  }
  SetState(job, state, reason);
  if (state != JobState::kFinished && phase != Phase::kQueued) {
    const std::string payload = MakeAbortPayload(job.spec.job_id, reason);
    for (const auto& site : job.status.participants) {
      control_->Call(wire::SiteAddress::Control(site), MessageKind::kAbort, job.spec.job_id,
                     payload, job.spec.reliable, now_, [](const reliable::CallOutcome&) {});
    }
  }
  Schedule();
}

void ServerProcess::SetState(Job& job, JobState state, const std::string& reason) {
  const bool initial = job.status.state == state && state == JobState::kSubmitted;
  Transition t{now_, job.spec.job_id, std::nullopt, state, reason};
  if (!initial) t.from = job.status.state;
  transitions_.push_back(t);
  job.status.state = state;
  if (!options_.runs_dir.empty()) {
    std::ofstream out(options_.runs_dir / job.spec.job_id / "events.jsonl", std::ios::app);
    out << TransitionToJson(t).dump() << "\n";
  }
  WriteStatus(job);
  if (on_transition_) on_transition_(t);
}

void ServerProcess::WriteStatus(const Job& job) const {
  if (options_.runs_dir.empty()) return;
  std::ofstream out(options_.runs_dir / job.spec.job_id / "status.json", std::ios::trunc);
  out << JobStatusToJson(job.status).dump(2) << "\n";
}

void ServerProcess::WriteHistory(Job& job) {
  if (job.history_written || !job.worker) return;
  job.history_written = true;
  if (options_.runs_dir.empty()) return;
  std::ofstream out(options_.runs_dir / job.spec.job_id / "history.json", std::ios::trunc);
  out << guestfl::HistoryToJson(job.worker->link().history());
}

void ServerProcess::OpenDirectLinks(Job& job) {
  std::vector<wire::SiteAddress> members{{site_, job.spec.job_id}};
  for (const auto& s : job.status.participants) members.push_back({s, job.spec.job_id});
  for (size_t i = 0; i < members.size(); ++i) {
    for (size_t j = i + 1; j < members.size(); ++j) {
      if (links_->OpenDirect(job.spec.job_id, members[i], members[j])) job.direct_links = true;
    }
  }
}

void ServerProcess::CloseDirectLinks(Job& job) {
  if (!job.direct_links) return;
  job.direct_links = false;
  std::vector<wire::SiteAddress> members{{site_, job.spec.job_id}};
  for (const auto& s : job.status.participants) members.push_back({s, job.spec.job_id});
  for (size_t i = 0; i < members.size(); ++i) {
    for (size_t j = i + 1; j < members.size(); ++j) links_->CloseDirect(members[i], members[j]);
  }
}

void ServerProcess::CheckHeartbeats() {
  const int64_t window = options_.heartbeat_ms * options_.missed_heartbeats;
  const std::set<std::string> snapshot = online_;
  for (const auto& site : snapshot) {
    const int64_t silent = now_ - last_seen_[site];
    if (silent <= window) continue;
    online_.erase(site);
    for (auto& [id, job] : jobs_) {
      if (IsTerminal(job.status.state) || !job.status.per_site.count(site)) continue;
      Terminate(job, JobState::kAborted,
                "site " + site + " offline: no heartbeat for " + std::to_string(silent) + " ms");
    }
  }
}

void ServerProcess::Tick(int64_t now) {
  now_ = std::max(now_, now);
  graveyard_.clear();
  DrainLocal(now_);
  control_->Tick(now_);
  std::vector<std::string> done;
  for (auto& [id, job] : jobs_) {
    if (!job.worker) continue;
    job.worker->Tick(now_);
    if (job.phase == Phase::kRunning && job.worker->finished()) done.push_back(id);
  }
  for (const auto& id : done) {
    Job& job = jobs_.at(id);
    if (job.phase != Phase::kRunning || !job.worker) continue;
    if (job.worker->link().state() == guestfl::GuestLink::State::kFailed) {
      Terminate(job, JobState::kFailed, "guest app failed: " + job.worker->link().failure_reason());
    } else {
      BeginFinish(job);
    }
  }
  CheckHeartbeats();
}

std::optional<int64_t> ServerProcess::NextWakeup() const {
  if (has_local()) return now_;
  std::optional<int64_t> next = control_->NextWakeup();
  for (const auto& [id, job] : jobs_) {
    if (!job.worker) continue;
    if (job.phase == Phase::kRunning && job.worker->finished()) return now_;
    Earliest(next, job.worker->NextWakeup());
  }
  const int64_t window = options_.heartbeat_ms * options_.missed_heartbeats;
  for (const auto& site : online_) Earliest(next, last_seen_.at(site) + window + 1);
  return next;
}

}  // namespace fedbridge::runtime
