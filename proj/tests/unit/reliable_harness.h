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

#ifndef FEDBRIDGE_TESTS_RELIABLE_HARNESS_H_
#define FEDBRIDGE_TESTS_RELIABLE_HARNESS_H_

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "fedbridge/netsim/fabric.h"
#include "fedbridge/reliable/endpoint.h"
#include "fedbridge/wire/codec.h"

namespace fedbridge::testing {

// Requester and responder joined by one fabric link, driven event by event.
// Order within one instant: deliveries, then scheduled timers, then ticks.
class ReliablePair {
 public:
  inline static const wire::SiteAddress kRequester{"client1", "job"};
  inline static const wire::SiteAddress kResponder{"server", "job"};

  explicit ReliablePair(const netsim::LinkPolicy& policy,
                        reliable::Endpoint::Options options = {})
      : requester_ids_(1),
        responder_ids_(2),
        requester(kRequester, &requester_ids_,
                  [this](const wire::Envelope& e) { return Send(kRequester, e); },
                  options),
        responder(kResponder, &responder_ids_,
                  [this](const wire::Envelope& e) { return Send(kResponder, e); },
                  options) {
    link_ = fabric.Connect(kRequester, kResponder, policy);
  }

  // Envelopes rejected by the filter vanish after being accepted.
  std::function<bool(const wire::Envelope&)> filter;
  std::vector<wire::Envelope> sent;

  void At(int64_t t, std::function<void()> fn) { timers_.emplace(t, std::move(fn)); }

  int64_t now() const { return fabric.now_ms(); }

  // Runs until `done` or the clock passes `limit`. Returns true if done.
  bool RunUntil(const std::function<bool()>& done, int64_t limit) {
    while (!done()) {
      std::optional<int64_t> next = fabric.NextDueMs();
      auto consider = [&](std::optional<int64_t> t) {
        if (t && (!next || *t < *next)) next = t;
      };
      consider(requester.NextWakeup());
      consider(responder.NextWakeup());
      if (!timers_.empty()) consider(timers_.begin()->first);
      if (!next || *next > limit) return false;
      int64_t t = std::max(*next, fabric.now_ms());
      for (auto& d : fabric.Step(t - fabric.now_ms())) {
        wire::Envelope env = wire::DecodeEnvelope(d.frame);
        (d.to == kRequester ? requester : responder).OnEnvelope(env, t);
      }
      while (!timers_.empty() && timers_.begin()->first <= t) {
        auto fn = std::move(timers_.begin()->second);
        timers_.erase(timers_.begin());
        fn();
      }
      requester.Tick(t);
      responder.Tick(t);
    }
    return true;
  }

  netsim::Fabric fabric;

 private:
  bool Send(const wire::SiteAddress& from, const wire::Envelope& env) {
    sent.push_back(env);
    if (filter && !filter(env)) return true;
    return fabric.Send(link_, from, wire::EncodeEnvelope(env));
  }

  wire::MsgIdGenerator requester_ids_;
  wire::MsgIdGenerator responder_ids_;
  netsim::LinkId link_;
  std::multimap<int64_t, std::function<void()>> timers_;

 public:
  reliable::Endpoint requester;
  reliable::Endpoint responder;
};

}  // namespace fedbridge::testing

#endif  // FEDBRIDGE_TESTS_RELIABLE_HARNESS_H_
