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

#ifndef FEDBRIDGE_RUNTIME_CLIENT_H_
#define FEDBRIDGE_RUNTIME_CLIENT_H_

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "fedbridge/reliable/endpoint.h"
#include "fedbridge/runtime/process.h"
#include "fedbridge/runtime/workers.h"

namespace fedbridge::runtime {

struct ClientOptions {
  std::string site;
  int64_t heartbeat_ms = 1000;
  std::filesystem::path runs_dir;  // empty: no bridge transcripts
  uint64_t seed = 0;
  // Upper bound on waiting for metrics to drain when a worker stops.
  int64_t stop_drain_ms = 10'000;
};

// Client Control Process: receives deployments, spawns one worker per job,
// reports worker failures and sends heartbeats.
class ClientProcess : public Process {
 public:
  ClientProcess(ClientOptions options, LinkLayer* links);
  ~ClientProcess() override;

  void OnEnvelope(const wire::Envelope& env, int64_t now) override;
  void Tick(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;

  ClientWorker* worker(const std::string& job_id);
  size_t worker_count() const { return workers_.size(); }
  // Called after a worker is created, e.g. to announce its LGS port.
  void set_on_deploy(std::function<void(ClientWorker&)> fn) { on_deploy_ = std::move(fn); }
  // Called just before a stopped worker is destroyed.
  void set_on_retire(std::function<void(ClientWorker&)> fn) { on_retire_ = std::move(fn); }
  reliable::Endpoint& control() { return *control_; }
  uint64_t heartbeats_sent() const { return heartbeats_sent_; }

 protected:
  std::pair<wire::SiteAddress, wire::SiteAddress> ControlHop(
      const wire::SiteAddress& dst) const override;

 private:
  struct PendingStop {
    std::string job_id;
    reliable::Endpoint::Completion done;
    int64_t deadline = 0;
  };
  struct Report {
    std::string job_id;
    std::string reason;
    bool peer_fault = false;
  };

  void HandleControl(const wire::Envelope& req, reliable::Endpoint::Completion done);
  void Deploy(const wire::Envelope& req, reliable::Endpoint::Completion done);
  void SendHeartbeat();
  void SendReports();
  void FinishStops();

  ClientOptions options_;
  wire::MsgIdGenerator ids_;
  std::unique_ptr<reliable::Endpoint> control_;
  std::map<std::string, std::unique_ptr<ClientWorker>> workers_;
  std::map<std::string, reliable::Timeouts> timeouts_;
  std::set<std::string> stopped_jobs_;
  std::vector<PendingStop> stops_;
  std::deque<Report> reports_;
  std::vector<std::unique_ptr<ClientWorker>> graveyard_;
  std::function<void(ClientWorker&)> on_deploy_;
  std::function<void(ClientWorker&)> on_retire_;
  int64_t next_heartbeat_ = 0;
  uint64_t heartbeats_sent_ = 0;
  int64_t now_ = 0;
};

}  // namespace fedbridge::runtime

#endif  // FEDBRIDGE_RUNTIME_CLIENT_H_
