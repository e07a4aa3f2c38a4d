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

#ifndef FEDBRIDGE_RUNTIME_SERVER_H_
#define FEDBRIDGE_RUNTIME_SERVER_H_

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedbridge/guestfl/app_config.h"
#include "fedbridge/reliable/endpoint.h"
#include "fedbridge/runtime/job.h"
#include "fedbridge/runtime/process.h"
#include "fedbridge/runtime/scenario.h"
#include "fedbridge/runtime/scheduler.h"
#include "fedbridge/runtime/workers.h"
#include "fedbridge/tracking/metrics.h"

namespace fedbridge::runtime {

struct ServerOptions {
  std::vector<SiteConfig> sites;
  std::map<std::string, guestfl::AppConfig> apps;
  bool allow_direct = true;
  int64_t heartbeat_ms = 1000;
  int missed_heartbeats = 3;
  std::filesystem::path runs_dir;  // empty: no artifacts
  uint64_t seed = 0;

  static ServerOptions FromScenario(const ScenarioConfig& scenario);
};

struct Transition {
  int64_t t_ms = 0;
  std::string job_id;
  std::optional<JobState> from;
  JobState to = JobState::kSubmitted;
  std::string reason;
};

// Control-plane request bodies (SUBMIT, STATUS, ABORT payloads).
std::string MakeSubmitPayload(const JobSpec& spec, const guestfl::AppConfig* app);
std::string MakeStatusQuery(const std::string& job_id);
std::string MakeListQuery();
std::string MakeEventsQuery(const std::string& job_id);

// One events.jsonl line.
nlohmann::json TransitionToJson(const Transition& t);
Transition TransitionFromJson(const nlohmann::json& j);
std::string MakeAbortPayload(const std::string& job_id, const std::string& reason);

// Server Control Process: schedules, deploys, monitors and aborts jobs,
// hosts the server-side workers, relays job traffic and sinks metrics.
class ServerProcess : public Process {
 public:
  ServerProcess(ServerOptions options, LinkLayer* links);
  ~ServerProcess() override;

  // Throws Error with kDuplicateJobId, kUnknownApp, kNeverSchedulable,
  // kDirectNotPermitted or kInvalidConfig.
  JobStatus Submit(const JobSpec& spec, const guestfl::AppConfig* app = nullptr);
  // Idempotent for terminal jobs. Throws Error(kUnknownJob).
  JobStatus Abort(const std::string& job_id, const std::string& reason);
  // Throws Error(kUnknownJob).
  JobStatus Status(const std::string& job_id) const;
  std::vector<JobStatus> List() const;

  void OnEnvelope(const wire::Envelope& env, int64_t now) override;
  void Tick(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;

  const SlotTable& slots() const { return slots_; }
  const std::set<std::string>& online() const { return online_; }
  ServerWorker* worker(const std::string& job_id);
  const tracking::MetricSink* sink(const std::string& job_id) const;
  const std::vector<Transition>& transitions() const { return transitions_; }
  void set_on_transition(std::function<void(const Transition&)> fn) {
    on_transition_ = std::move(fn);
  }
  reliable::Endpoint& control() { return *control_; }
  int64_t now() const { return now_; }
  uint64_t metric_unknown_job() const { return metric_unknown_job_; }

 protected:
  std::pair<wire::SiteAddress, wire::SiteAddress> ControlHop(
      const wire::SiteAddress& dst) const override;

 private:
  enum class Phase { kQueued, kDeploying, kStarting, kRunning, kFinishing, kDone };
  struct Job {
    JobSpec spec;
    guestfl::AppConfig app;
    JobStatus status;
    Phase phase = Phase::kQueued;
    std::map<std::string, int> reserved;
    std::set<std::string> awaiting;
    std::unique_ptr<ServerWorker> worker;
    bool direct_links = false;
    bool history_written = false;
  };

  void HandleControl(const wire::Envelope& req, reliable::Endpoint::Completion done);
  void HandleStatus(const wire::Envelope& req, reliable::Endpoint::Completion done);
  void HandleMetric(const wire::Envelope& env);
  void Relay(const wire::Envelope& env);
  void DispatchToWorker(const wire::Envelope& env);

  void Schedule();
  void Admit(const Admission& admission);
  void CallSites(Job& job, wire::MessageKind kind, const std::string& payload,
                 void (ServerProcess::*on_outcome)(const std::string&, const std::string&,
                                                   const reliable::CallOutcome&));
  void OnDeployed(const std::string& job_id, const std::string& site,
                  const reliable::CallOutcome& outcome);
  void OnStarted(const std::string& job_id, const std::string& site,
                 const reliable::CallOutcome& outcome);
  void OnStopped(const std::string& job_id, const std::string& site,
                 const reliable::CallOutcome& outcome);
  void FailCall(Job& job, std::string_view what, const std::string& site,
                const reliable::CallOutcome& outcome);
  void BeginFinish(Job& job);
  void Terminate(Job& job, JobState state, const std::string& reason);
  void SetState(Job& job, JobState state, const std::string& reason);
  void OpenDirectLinks(Job& job);
  void CloseDirectLinks(Job& job);
  void WriteHistory(Job& job);
  void WriteStatus(const Job& job) const;
  void CheckHeartbeats();
  Job* Find(const std::string& job_id);
  const Job& Get(const std::string& job_id) const;
  bool IsNetworkLive(const Job& job) const;

  ServerOptions options_;
  wire::MsgIdGenerator ids_;
  std::unique_ptr<reliable::Endpoint> control_;
  std::map<std::string, Job> jobs_;
  std::deque<PendingJob> queue_;
  SlotTable slots_;
  std::set<std::string> known_sites_;
  std::set<std::string> online_;
  std::map<std::string, int64_t> last_seen_;
  std::map<std::string, std::unique_ptr<tracking::MetricSink>> sinks_;
  std::vector<std::unique_ptr<ServerWorker>> graveyard_;
  std::vector<Transition> transitions_;
  std::function<void(const Transition&)> on_transition_;
  uint64_t metric_unknown_job_ = 0;
  int64_t now_ = 0;
};

}  // namespace fedbridge::runtime

#endif  // FEDBRIDGE_RUNTIME_SERVER_H_
