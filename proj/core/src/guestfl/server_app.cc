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

#include "fedbridge/guestfl/server_app.h"

#include <algorithm>

#include "fedbridge/error.h"

namespace fedbridge::guestfl {

std::string_view LinkStateName(GuestLink::State state) {
  switch (state) {
    case GuestLink::State::kWaitingNodes: return "WAITING_NODES";
    case GuestLink::State::kFit: return "FIT";
    case GuestLink::State::kEvaluate: return "EVALUATE";
    case GuestLink::State::kDone: return "DONE";
    case GuestLink::State::kFailed: return "FAILED";
  }
  return "?";
}

GuestLink::GuestLink(AppConfig app, size_t expected_nodes)
    : app_(std::move(app)),
      expected_(std::max<size_t>(expected_nodes, static_cast<size_t>(app_.min_clients))),
      strategy_(app_.strategy, app_.fedadam),
      global_(app_.InitialWeights()) {}

std::string GuestLink::Handle(std::string_view body) {
  ++requests_;
  NodeMessage m;
  try {
    m = DecodeNodeMessage(body);
  } catch (const Error& e) {
    LinkMessage err;
    err.type = LinkMessage::Type::kError;
    err.reason = e.what();
    return EncodeLinkMessage(err);
  }
  LinkMessage reply;
  switch (m.type) {
    case NodeMessage::Type::kPull: reply = OnPull(m.node); break;
    case NodeMessage::Type::kPush: reply = OnPush(m); break;
    case NodeMessage::Type::kFault:
      reply = Fail("site " + m.node + " reported a fault: " + m.reason);
      break;
  }
  return EncodeLinkMessage(reply);
}

LinkMessage GuestLink::Fail(std::string reason) {
  if (state_ != State::kFailed) {
    state_ = State::kFailed;
    failure_ = std::move(reason);
  }
  LinkMessage err;
  err.type = LinkMessage::Type::kError;
  err.reason = failure_;
  return err;
}

LinkMessage GuestLink::OnPull(const std::string& node) {
  LinkMessage reply;
  if (state_ == State::kWaitingNodes) {
    registered_.insert(node);
    if (registered_.size() < expected_) return reply;
    participants_ = registered_;
    round_ = 1;
    state_ = State::kFit;
  }
  switch (state_) {
    case State::kDone:
      if (participants_.count(node)) released_.insert(node);
      reply.type = LinkMessage::Type::kDone;
      return reply;
    case State::kFailed:
      return Fail(failure_);
    default:
      break;
  }
  if (!participants_.count(node)) {
    reply.type = LinkMessage::Type::kDone;
    return reply;
  }
  bool fit = state_ == State::kFit;
  if (fit ? fits_.count(node) : evals_.count(node)) return reply;
  reply.type = LinkMessage::Type::kTask;
  reply.round = round_;
  reply.op = fit ? Op::kFit : Op::kEvaluate;
  reply.weights = global_;
  return reply;
}

LinkMessage GuestLink::OnPush(const NodeMessage& m) {
  LinkMessage ack;
  ack.type = LinkMessage::Type::kAck;
  if (state_ == State::kFailed) return Fail(failure_);
  if (!participants_.count(m.node)) {
    LinkMessage err;
    err.type = LinkMessage::Type::kError;
    err.reason = "node " + m.node + " is not a participant";
    return err;
  }
  const bool current_fit = state_ == State::kFit && m.op == Op::kFit;
  const bool current_eval = state_ == State::kEvaluate && m.op == Op::kEvaluate;
  // Stale or repeated pushes are acknowledged and ignored.
  if (m.round != round_ || !(current_fit || current_eval)) return ack;

  if (current_fit) {
    if (m.fit.weights.weights.size() != global_.size()) {
      return Fail("site " + m.node + " returned " +
                  std::to_string(m.fit.weights.weights.size()) + " weights, expected " +
                  std::to_string(global_.size()));
    }
    fits_.emplace(m.node, m.fit);
    if (fits_.size() < participants_.size()) return ack;
    try {
      global_ = strategy_.Aggregate(global_, fits_);
    } catch (const Error& e) {
      return Fail(std::string("aggregation failed: ") + e.what());
    }
    fits_.clear();
    state_ = State::kEvaluate;
    return ack;
  }

  evals_.emplace(m.node, m.eval);
  if (evals_.size() < participants_.size()) return ack;
  double loss = 0, accuracy = 0, total = 0;
  for (const auto& [site, e] : evals_) {
    const double n = static_cast<double>(e.num_examples);
    loss += n * e.loss;
    accuracy += n * e.metrics.at("accuracy");
    total += n;
  }
  history_.push_back({round_, loss / total, accuracy / total});
  evals_.clear();
  if (round_ >= app_.num_rounds) {
    state_ = State::kDone;
  } else {
    ++round_;
    state_ = State::kFit;
  }
  return ack;
}

void GuestLinkServer::Tick(int64_t now) {
  now_ = std::max(now_, now);
  while (auto stream = listener_->Accept()) {
    conns_.push_back(std::make_unique<net::FramedConnection>(std::move(stream)));
    ++accepted_;
  }
  for (auto& conn : conns_) {
    try {
      while (auto body = conn->ReadFrame()) conn->WriteFrame(link_->Handle(*body));
    } catch (const Error&) {
      conn->Close();
    }
    if (conn->PeerClosed()) conn->Close();
  }
  std::erase_if(conns_, [](const auto& c) { return c->IsClosed(); });
}

std::optional<int64_t> GuestLinkServer::NextWakeup() const {
  if (listener_->HasPending()) return now_;
  for (const auto& conn : conns_) {
    if (conn->HasInput()) return now_;
  }
  return std::nullopt;
}

}  // namespace fedbridge::guestfl
