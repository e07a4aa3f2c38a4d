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

#ifndef FEDBRIDGE_RUNTIME_SOCKETS_H_
#define FEDBRIDGE_RUNTIME_SOCKETS_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedbridge/net/stream.h"
#include "fedbridge/reliable/endpoint.h"
#include "fedbridge/runtime/client.h"
#include "fedbridge/runtime/server.h"

namespace fedbridge::runtime {

// Milliseconds since construction on the steady clock.
class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  int64_t now() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Something serviced by a poll() loop.
class SocketHost {
 public:
  virtual ~SocketHost() = default;
  virtual std::vector<int> fds() const = 0;
  // Accepts, reads and dispatches whatever is ready, then ticks.
  virtual void Service(int64_t now) = 0;
  virtual std::optional<int64_t> NextWakeup() const = 0;
};

// Waits until a descriptor is readable, a host is due, or `max_wait_ms`
// passes, then services every host.
void PollHosts(std::span<SocketHost* const> hosts, const WallClock& clock, int64_t max_wait_ms);

// The SCP on one TCP port. Each connection is bound to the site named in the
// src of its first frame; operator tools connect the same way under their
// own names. Direct job links are not offered, so direct jobs relay.
class ServerHost : public SocketHost {
 public:
  // Port 0 binds an ephemeral port. Throws Error(kIo) if the bind fails.
  ServerHost(ServerOptions options, uint16_t port, bool loopback_only = true);
  ~ServerHost() override;

  uint16_t port() const { return listener_.port(); }
  ServerProcess& server() { return *server_; }
  std::vector<int> fds() const override;
  void Service(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;
  size_t connections() const;

 private:
  class Links;
  struct Conn {
    std::unique_ptr<net::FramedConnection> conn;
    std::string site;
  };

  net::TcpListener listener_;
  std::unique_ptr<Links> links_;
  std::unique_ptr<ServerProcess> server_;
  std::vector<Conn> conns_;
  mutable std::mutex mu_;
};

// A CCP dialing the server, redialing after a lost connection.
class ClientHost : public SocketHost {
 public:
  ClientHost(ClientOptions options, std::string host, uint16_t port);
  ~ClientHost() override;

  ClientProcess& client() { return *client_; }
  bool connected() const;
  std::vector<int> fds() const override;
  void Service(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;

 private:
  class Links;
  void Redial(int64_t now);

  std::string host_;
  uint16_t port_;
  std::unique_ptr<Links> links_;
  std::unique_ptr<ClientProcess> client_;
  int64_t next_dial_t_ = 0;
};

// Operator-side connection to the SCP control address: blocking control
// calls for the CLI.
class ControlClient {
 public:
  // Throws Error(kIo) when the server is unreachable.
  ControlClient(const std::string& host, uint16_t port, std::string name);
  ~ControlClient();

  // `job_id` must be nonempty since the call's retries and queries carry it;
  // listing uses "*". Throws Error(kInvalidConfig) otherwise.
  reliable::CallOutcome Call(wire::MessageKind kind, const std::string& job_id,
                             const std::string& payload, const reliable::Timeouts& timeouts);
  const std::string& name() const { return name_; }

 private:
  void Pump(int64_t wait_ms);

  std::string name_;
  WallClock clock_;
  wire::MsgIdGenerator ids_;
  std::unique_ptr<net::FramedConnection> conn_;
  std::unique_ptr<reliable::Endpoint> endpoint_;
};

}  // namespace fedbridge::runtime

#endif  // FEDBRIDGE_RUNTIME_SOCKETS_H_
