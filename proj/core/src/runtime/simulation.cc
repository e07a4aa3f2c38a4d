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

#include "fedbridge/runtime/simulation.h"

#include <algorithm>
#include <stdexcept>

#include "fedbridge/error.h"
#include "fedbridge/wire/codec.h"

namespace fedbridge::runtime {

using wire::SiteAddress;

class Simulation::Links : public LinkLayer {
 public:
  explicit Links(Simulation* sim) : sim_(sim) {}

  bool Send(const SiteAddress& from, const SiteAddress& to, const wire::Envelope& env) override {
    auto link = sim_->fabric_.Find(from, to);
    if (!link) return false;
    return sim_->fabric_.Send(*link, from, wire::EncodeEnvelope(env));
  }

  bool HasLink(const SiteAddress& a, const SiteAddress& b) const override {
    return sim_->fabric_.Find(a, b).has_value();
  }

  bool OpenDirect(const std::string& job_id, const SiteAddress& a, const SiteAddress& b) override {
    if (sim_->fabric_.Find(a, b)) return true;
    const std::string& site = a.is_server() ? b.site : a.site;
    sim_->fabric_.Connect(a, b, sim_->scenario_.DirectLinkFor(site, job_id));
    if (a.is_server() || b.is_server()) sim_->ApplyDirectFault(site, job_id);
    return true;
  }

  void CloseDirect(const SiteAddress& a, const SiteAddress& b) override {
    if (auto link = sim_->fabric_.Find(a, b)) sim_->fabric_.Close(*link);
  }

 private:
  Simulation* sim_;
};

Simulation::Simulation(ScenarioConfig scenario)
    : scenario_(std::move(scenario)), links_(std::make_unique<Links>(this)) {
  fabric_.set_trace_hook([this](const netsim::Delivery& d) { trace_.Record(d); });
  server_ = std::make_unique<ServerProcess>(ServerOptions::FromScenario(scenario_), links_.get());
  for (const auto& site : scenario_.sites) {
    ClientOptions o;
    o.site = site.name;
    o.heartbeat_ms = scenario_.heartbeat_ms;
    o.runs_dir = scenario_.runs_dir;
    o.seed = scenario_.seed;
    clients_[site.name] = std::make_unique<ClientProcess>(o, links_.get());
    fabric_.Connect(SiteAddress::Control(site.name), SiteAddress::Server(),
                    scenario_.LinkFor(site.name));
  }
  events_ = scenario_.events;
  std::stable_sort(events_.begin(), events_.end(),
                   [](const FaultEvent& a, const FaultEvent& b) { return a.t_ms < b.t_ms; });
}

Simulation::~Simulation() = default;

void Simulation::ApplyEvent(const FaultEvent& e) {
  if (e.action == FaultAction::kAbort) {
    try {
      server_->Abort(e.job, "operator abort");
    } catch (const Error&) {
    }
    return;
  }
  if (e.path == LinkPath::kDirect) {
    direct_faults_[{e.site, e.job}] = e;
    ApplyDirectFault(e.site, e.job);
    return;
  }
  const SiteAddress site = SiteAddress::Control(e.site);
  auto link = fabric_.Find(site, SiteAddress::Server());
  if (!link) return;
  const bool cut = e.action == FaultAction::kPartition;
  switch (e.direction) {
    case LinkDirection::kBoth: fabric_.SetPartitioned(*link, cut); break;
    case LinkDirection::kToServer: fabric_.SetPartitioned(*link, site, cut); break;
    case LinkDirection::kFromServer:
      fabric_.SetPartitioned(*link, SiteAddress::Server(), cut);
      break;
  }
}

void Simulation::ApplyDirectFault(const std::string& site, const std::string& job) {
  auto it = direct_faults_.find({site, job});
  if (it == direct_faults_.end()) return;
  const SiteAddress client{site, job};
  const SiteAddress server{std::string(wire::kServerSite), job};
  auto link = fabric_.Find(client, server);
  if (!link) return;
  const bool cut = it->second.action == FaultAction::kPartition;
  switch (it->second.direction) {
    case LinkDirection::kBoth: fabric_.SetPartitioned(*link, cut); break;
    case LinkDirection::kToServer: fabric_.SetPartitioned(*link, client, cut); break;
    case LinkDirection::kFromServer: fabric_.SetPartitioned(*link, server, cut); break;
  }
}

bool Simulation::RunUntil(const std::function<bool()>& done, int64_t limit_ms) {
  int64_t last_t = -1;
  uint64_t same_t = 0;
  while (!done()) {
    std::optional<int64_t> next = fabric_.NextDueMs();
    auto consider = [&](std::optional<int64_t> t) {
      if (t && (!next || *t < *next)) next = t;
    };
    consider(server_->NextWakeup());
    for (const auto& [name, c] : clients_) consider(c->NextWakeup());
    if (next_event_ < events_.size()) consider(events_[next_event_].t_ms);
    if (!next || *next > limit_ms) return false;
    const int64_t t = std::max(*next, fabric_.now_ms());
    if (t == last_t) {
      if (++same_t > 1'000'000) {
        throw std::runtime_error("simulation stalled at t=" + std::to_string(t));
      }
    } else {
      last_t = t;
      same_t = 0;
    }
    for (auto& d : fabric_.Step(t - fabric_.now_ms())) {
      wire::Envelope env;
      try {
        env = wire::DecodeEnvelope(d.frame);
      } catch (const Error&) {
        ++undecodable_;
        continue;
      }
      if (d.to.site == wire::kServerSite) {
        server_->OnEnvelope(env, t);
      } else if (auto it = clients_.find(d.to.site); it != clients_.end()) {
        it->second->OnEnvelope(env, t);
      }
    }
    while (next_event_ < events_.size() && events_[next_event_].t_ms <= t) {
      ApplyEvent(events_[next_event_++]);
    }
    server_->Tick(t);
    for (auto& [name, c] : clients_) c->Tick(t);
    if (step_hook_) step_hook_(t);
  }
  return true;
}

JobStatus Simulation::RunJob(const JobSpec& spec, const guestfl::AppConfig* app) {
  server_->Submit(spec, app);
  const std::string id = spec.job_id;
  RunUntil([&] { return IsTerminal(server_->Status(id).state); }, scenario_.time_limit_ms);
  return server_->Status(id);
}

size_t Simulation::CrossJobDeliveries() const {
  size_t n = 0;
  for (const auto& e : trace_.entries()) {
    if (!e.decoded || e.env_dst.worker.empty()) continue;
    if (e.job_id != e.env_dst.worker) ++n;
  }
  return n;
}

}  // namespace fedbridge::runtime
