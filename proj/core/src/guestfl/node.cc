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

#include "fedbridge/guestfl/node.h"

#include <algorithm>

#include "fedbridge/error.h"

namespace fedbridge::guestfl {

GuestNode::GuestNode(std::string site, ClientApp app, net::StreamDialer* dialer,
                     int64_t poll_ms, int max_redials)
    : site_(std::move(site)),
      app_(std::move(app)),
      dialer_(dialer),
      poll_ms_(poll_ms),
      max_redials_(max_redials) {
  pending_ = Pull();
}

std::string GuestNode::Pull() const {
  NodeMessage m;
  m.type = NodeMessage::Type::kPull;
  m.node = site_;
  return EncodeNodeMessage(m);
}

void GuestNode::Finish(State state, std::string reason) {
  state_ = state;
  failure_ = std::move(reason);
  if (conn_) conn_->Close();
  conn_.reset();
}

void GuestNode::Send(std::string body) {
  pending_ = std::move(body);
  transcript_.push_back({true, pending_});
  conn_->WriteFrame(pending_);
  state_ = State::kAwait;
}

void GuestNode::Tick(int64_t now) {
  now_ = std::max(now_, now);
  if (state_ == State::kIdle && now_ >= next_t_) {
    if (!conn_) {
      auto stream = dialer_->Dial();
      if (!stream) {
        if (++redials_ > max_redials_) return Finish(State::kFailed, "cannot reach guest link");
        next_t_ = now_ + poll_ms_;
        return;
      }
      conn_ = std::make_unique<net::FramedConnection>(std::move(stream));
    }
    Send(pending_);
  }
  while (state_ == State::kAwait) {
    std::optional<std::string> body;
    try {
      body = conn_->ReadFrame();
    } catch (const Error& e) {
      return Finish(State::kFailed, e.what());
    }
    if (body) {
      transcript_.push_back({false, *body});
      OnReply(*body);
      continue;
    }
    if (conn_->PeerClosed() || conn_->IsClosed()) {
      conn_.reset();
      if (++redials_ > max_redials_) return Finish(State::kFailed, "guest link connection lost");
      state_ = State::kIdle;
      next_t_ = now_ + poll_ms_;
    }
    break;
  }
}

void GuestNode::OnReply(std::string_view body) {
  LinkMessage reply;
  try {
    reply = DecodeLinkMessage(body);
  } catch (const Error& e) {
    return Finish(State::kFailed, std::string("bad reply from link: ") + e.what());
  }
  switch (reply.type) {
    case LinkMessage::Type::kWait:
      pending_ = Pull();
      state_ = State::kIdle;
      next_t_ = now_ + poll_ms_;
      return;
    case LinkMessage::Type::kAck:
      if (flush_on_ack_) {
        flush_on_ack_ = false;
        if (auto* w = app_.writer()) w->Flush();
      }
      return Send(Pull());
    case LinkMessage::Type::kDone:
      return Finish(State::kDone);
    case LinkMessage::Type::kError:
      return Finish(State::kFailed, reply.reason);
    case LinkMessage::Type::kTask:
      break;
  }
  NodeMessage push;
  push.node = site_;
  push.round = reply.round;
  push.op = reply.op;
  try {
    ModelVector global{std::move(reply.weights), reply.round};
    if (reply.op == Op::kFit) {
      push.fit = app_.Fit(global);
    } else {
      push.eval = app_.Evaluate(global);
      flush_on_ack_ = true;
    }
    push.type = NodeMessage::Type::kPush;
  } catch (const Error& e) {
    push.type = NodeMessage::Type::kFault;
    push.reason = e.what();
  }
  Send(EncodeNodeMessage(push));
}

std::optional<int64_t> GuestNode::NextWakeup() const {
  switch (state_) {
    case State::kIdle: return std::max(next_t_, now_);
    case State::kAwait:
      if (conn_ && conn_->HasInput()) return now_;
      return std::nullopt;
    default: return std::nullopt;
  }
}

}  // namespace fedbridge::guestfl
