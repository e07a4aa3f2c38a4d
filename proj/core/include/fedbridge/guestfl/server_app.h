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

#ifndef FEDBRIDGE_GUESTFL_SERVER_APP_H_
#define FEDBRIDGE_GUESTFL_SERVER_APP_H_

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fedbridge/guestfl/app_config.h"
#include "fedbridge/guestfl/protocol.h"
#include "fedbridge/guestfl/strategy.h"
#include "fedbridge/net/actor.h"
#include "fedbridge/net/stream.h"

namespace fedbridge::guestfl {

// The guest link plus server app: answers node requests and drives rounds of
// fit, aggregate, evaluate. Rounds start once `expected_nodes` distinct nodes
// have pulled; those nodes are the participants for the whole run.
class GuestLink {
 public:
  enum class State { kWaitingNodes, kFit, kEvaluate, kDone, kFailed };

  GuestLink(AppConfig app, size_t expected_nodes);

  // One response per request. Undecodable requests get an error response but
  // do not fail the run.
  std::string Handle(std::string_view body);

  State state() const { return state_; }
  bool finished() const { return state_ == State::kDone || state_ == State::kFailed; }
  // Done, and every participant has been answered with DONE.
  bool released_all() const {
    return state_ == State::kDone && released_.size() == participants_.size();
  }
  const History& history() const { return history_; }
  const std::string& failure_reason() const { return failure_; }
  const std::vector<double>& global() const { return global_; }
  const std::set<std::string>& participants() const { return participants_; }
  int round() const { return round_; }
  uint64_t requests() const { return requests_; }

 private:
  LinkMessage OnPull(const std::string& node);
  LinkMessage OnPush(const NodeMessage& m);
  LinkMessage Fail(std::string reason);

  AppConfig app_;
  size_t expected_;
  Strategy strategy_;
  State state_ = State::kWaitingNodes;
  int round_ = 0;
  std::set<std::string> registered_;
  std::set<std::string> participants_;
  std::set<std::string> released_;
  std::vector<double> global_;
  std::map<std::string, FitResult> fits_;
  std::map<std::string, EvalResult> evals_;
  History history_;
  std::string failure_;
  uint64_t requests_ = 0;
};

std::string_view LinkStateName(GuestLink::State state);

// Serves a GuestLink to every connection accepted on `listener`.
class GuestLinkServer : public net::Actor {
 public:
  GuestLinkServer(GuestLink* link, net::StreamListener* listener)
      : link_(link), listener_(listener) {}

  void Tick(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;
  size_t connections() const { return conns_.size(); }
  uint64_t accepted() const { return accepted_; }

 private:
  GuestLink* link_;
  net::StreamListener* listener_;
  std::vector<std::unique_ptr<net::FramedConnection>> conns_;
  uint64_t accepted_ = 0;
  int64_t now_ = 0;
};

}  // namespace fedbridge::guestfl

#endif  // FEDBRIDGE_GUESTFL_SERVER_APP_H_
