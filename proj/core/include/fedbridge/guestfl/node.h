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

#ifndef FEDBRIDGE_GUESTFL_NODE_H_
#define FEDBRIDGE_GUESTFL_NODE_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedbridge/guestfl/client_app.h"
#include "fedbridge/guestfl/protocol.h"
#include "fedbridge/net/actor.h"
#include "fedbridge/net/stream.h"

namespace fedbridge::guestfl {

struct TranscriptEntry {
  bool to_link = true;
  std::string body;

  bool operator==(const TranscriptEntry&) const = default;
};

// Client-side daemon: dials the link, pulls tasks, runs the client app and
// pushes results. Strictly one outstanding request; after a lost connection
// it redials and repeats the unanswered request.
class GuestNode : public net::Actor {
 public:
  GuestNode(std::string site, ClientApp app, net::StreamDialer* dialer, int64_t poll_ms,
            int max_redials = 50);

  void Tick(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;

  bool done() const { return state_ == State::kDone; }
  bool failed() const { return state_ == State::kFailed; }
  bool finished() const { return done() || failed(); }
  const std::string& failure() const { return failure_; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  const std::string& site() const { return site_; }
  ClientApp& app() { return app_; }

 private:
  enum class State { kIdle, kAwait, kDone, kFailed };

  void Send(std::string body);
  void OnReply(std::string_view body);
  void Finish(State state, std::string reason = {});
  std::string Pull() const;

  std::string site_;
  ClientApp app_;
  net::StreamDialer* dialer_;
  int64_t poll_ms_;
  int max_redials_;
  int redials_ = 0;
  std::unique_ptr<net::FramedConnection> conn_;
  State state_ = State::kIdle;
  int64_t now_ = 0;
  int64_t next_t_ = 0;
  std::string pending_;
  bool flush_on_ack_ = false;
  std::string failure_;
  std::vector<TranscriptEntry> transcript_;
};

}  // namespace fedbridge::guestfl

#endif  // FEDBRIDGE_GUESTFL_NODE_H_
