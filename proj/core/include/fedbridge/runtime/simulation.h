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

#ifndef FEDBRIDGE_RUNTIME_SIMULATION_H_
#define FEDBRIDGE_RUNTIME_SIMULATION_H_

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "fedbridge/netsim/fabric.h"
#include "fedbridge/netsim/trace.h"
#include "fedbridge/runtime/client.h"
#include "fedbridge/runtime/scenario.h"
#include "fedbridge/runtime/server.h"

namespace fedbridge::runtime {

// Single-process simulator: the SCP and one CCP per site joined by fabric
// links, driven on the fabric's virtual clock.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig scenario);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  ServerProcess& server() { return *server_; }
  ClientProcess& client(const std::string& site) { return *clients_.at(site); }
  netsim::Fabric& fabric() { return fabric_; }
  const netsim::TraceLog& trace() const { return trace_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  int64_t now() const { return fabric_.now_ms(); }

  // Advances until `done` holds (true) or nothing is due before `limit_ms`
  // (false). Throws std::runtime_error if the clock stops advancing.
  bool RunUntil(const std::function<bool()>& done, int64_t limit_ms);
  // Submits and runs until the job is terminal or the scenario time limit.
  JobStatus RunJob(const JobSpec& spec, const guestfl::AppConfig* app = nullptr);

  // Called after every simulated instant.
  void set_step_hook(std::function<void(int64_t)> hook) { step_hook_ = std::move(hook); }
  uint64_t undecodable() const { return undecodable_; }
  // Trace entries addressed to a worker of one job but carrying another
  // job's id.
  size_t CrossJobDeliveries() const;

 private:
  class Links;

  void ApplyEvent(const FaultEvent& e);
  void ApplyDirectFault(const std::string& site, const std::string& job);

  ScenarioConfig scenario_;
  netsim::Fabric fabric_;
  netsim::TraceLog trace_;
  std::unique_ptr<Links> links_;
  std::unique_ptr<ServerProcess> server_;
  std::map<std::string, std::unique_ptr<ClientProcess>> clients_;
  std::vector<FaultEvent> events_;
  size_t next_event_ = 0;
  std::map<std::pair<std::string, std::string>, FaultEvent> direct_faults_;
  std::function<void(int64_t)> step_hook_;
  uint64_t undecodable_ = 0;
};

}  // namespace fedbridge::runtime

#endif  // FEDBRIDGE_RUNTIME_SIMULATION_H_
