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

#ifndef FEDBRIDGE_BRIDGE_BRIDGE_H_
#define FEDBRIDGE_BRIDGE_BRIDGE_H_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "fedbridge/bridge/guest_message.h"
#include "fedbridge/net/actor.h"
#include "fedbridge/net/stream.h"
#include "fedbridge/reliable/endpoint.h"

namespace fedbridge::bridge {

// JSON lines {t_ms, stream_id, seq, direction, bytes, body_b64}.
class Transcript {
 public:
  explicit Transcript(std::filesystem::path path) : path_(std::move(path)) {}
  void Record(int64_t t_ms, const GuestMessage& m);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct LgsStats {
  uint64_t streams = 0;
  uint64_t forwarded = 0;
  uint64_t delivered = 0;
  uint64_t dropped_closed = 0;
  uint64_t resets = 0;
};

// Local guest server inside a client worker. Every guest frame read from an
// accepted stream becomes one GUEST_FWD call to the server worker; the
// result is written back to the same stream. One call per stream in flight.
class LocalGuestServer : public net::Actor {
 public:
  struct Options {
    std::string job_id;
    wire::SiteAddress self;
    wire::SiteAddress server_worker;
    reliable::Timeouts timeouts;
    std::filesystem::path transcript;  // empty: no transcript
  };
  // `peer_fault` distinguishes a fault reported by the far side from a
  // reliability failure.
  using FailureFn = std::function<void(const std::string& reason, bool peer_fault)>;

  LocalGuestServer(Options options, reliable::Endpoint* endpoint,
                   net::StreamListener* listener, FailureFn on_failure);

  void Tick(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;
  // Closes every stream; later connections are left unaccepted.
  void Shutdown();

  const LgsStats& stats() const { return stats_; }
  size_t open_streams() const;

 private:
  struct Stream {
    std::unique_ptr<net::FramedConnection> conn;
    uint64_t next_seq = 1;
    std::deque<std::string> queue;
    bool in_flight = false;
    bool open = true;
  };

  void Forward(uint64_t id, Stream& s, int64_t now);
  void OnResult(uint64_t id, uint64_t seq, const reliable::CallOutcome& outcome);
  void Fail(const std::string& reason, bool peer_fault);

  Options options_;
  reliable::Endpoint* endpoint_;
  net::StreamListener* listener_;
  FailureFn on_failure_;
  std::optional<Transcript> transcript_;
  std::map<uint64_t, Stream> streams_;
  uint64_t next_stream_id_ = 1;
  bool shut_down_ = false;
  bool failed_ = false;
  int64_t now_ = 0;
  LgsStats stats_;
};

struct LgcStats {
  uint64_t connections = 0;
  uint64_t forwarded = 0;
  uint64_t returned = 0;
  uint64_t dial_failures = 0;
};

// Local guest client inside the server worker: one guest-link connection
// per (site, stream_id), requests written in order, responses matched FIFO.
class LocalGuestClient : public net::Actor {
 public:
  explicit LocalGuestClient(net::StreamDialer* dialer) : dialer_(dialer) {}

  // GUEST_FWD handler for the server worker's endpoint.
  void Handle(const wire::Envelope& request, reliable::Endpoint::Completion done);

  void Tick(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;
  void Shutdown();
  const LgcStats& stats() const { return stats_; }

 private:
  struct Waiting {
    uint64_t seq;
    reliable::Endpoint::Completion done;
  };
  struct Conn {
    std::unique_ptr<net::FramedConnection> conn;
    std::deque<Waiting> waiting;
  };

  net::StreamDialer* dialer_;
  std::map<std::pair<std::string, uint64_t>, Conn> conns_;
  int64_t now_ = 0;
  LgcStats stats_;
};

}  // namespace fedbridge::bridge

#endif  // FEDBRIDGE_BRIDGE_BRIDGE_H_
