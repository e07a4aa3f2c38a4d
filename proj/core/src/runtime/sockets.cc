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

#include "fedbridge/runtime/sockets.h"

#include <poll.h>

#include <algorithm>

#include "fedbridge/error.h"
#include "fedbridge/guestfl/app_config.h"
#include "fedbridge/wire/codec.h"

namespace fedbridge::runtime {

using wire::SiteAddress;

namespace {

constexpr int64_t kRedialMs = 500;

// Reads every complete frame; false once the connection is unusable.
template <typename Fn>
bool ReadFrames(net::FramedConnection& conn, Fn&& on_envelope) {
  try {
    while (auto body = conn.ReadFrame()) {
      try {
        on_envelope(wire::DecodeEnvelopeBody(*body));
      } catch (const Error&) {
        // Undecodable frames are dropped; reliability retries cover them.
      }
    }
  } catch (const Error&) {
    return false;
  }
  return !conn.PeerClosed() && !conn.IsClosed();
}

void Earliest(std::optional<int64_t>& acc, std::optional<int64_t> t) {
  if (t && (!acc || *t < *acc)) acc = t;
}

}  // namespace

void PollHosts(std::span<SocketHost* const> hosts, const WallClock& clock, int64_t max_wait_ms) {
  std::vector<pollfd> fds;
  std::optional<int64_t> next;
  for (SocketHost* h : hosts) {
    for (int fd : h->fds()) fds.push_back({fd, POLLIN, 0});
    Earliest(next, h->NextWakeup());
  }
  int64_t wait = max_wait_ms;
  if (next) wait = std::clamp<int64_t>(*next - clock.now(), 0, max_wait_ms);
  ::poll(fds.data(), fds.size(), static_cast<int>(wait));
  const int64_t now = clock.now();
  for (SocketHost* h : hosts) h->Service(now);
}

class ServerHost::Links : public LinkLayer {
 public:
  explicit Links(ServerHost* host) : host_(host) {}

  bool Send(const SiteAddress& from, const SiteAddress& to, const wire::Envelope& env) override {
    if (!from.is_server()) return false;
    std::lock_guard lock(host_->mu_);
    for (auto& c : host_->conns_) {
      if (c.site == to.site && !c.conn->IsClosed()) {
        c.conn->stream().Write(wire::EncodeEnvelope(env));
        return true;
      }
    }
    return false;
  }
  bool HasLink(const SiteAddress&, const SiteAddress&) const override { return false; }
  bool OpenDirect(const std::string&, const SiteAddress&, const SiteAddress&) override {
    return false;
  }
  void CloseDirect(const SiteAddress&, const SiteAddress&) override {}

 private:
  ServerHost* host_;
};

ServerHost::ServerHost(ServerOptions options, uint16_t port, bool loopback_only)
    : listener_(port, loopback_only), links_(std::make_unique<Links>(this)) {
  server_ = std::make_unique<ServerProcess>(std::move(options), links_.get());
}

ServerHost::~ServerHost() = default;

std::vector<int> ServerHost::fds() const {
  std::lock_guard lock(mu_);
  std::vector<int> out{listener_.fd()};
  for (const auto& c : conns_) out.push_back(c.conn->fd());
  return out;
}

size_t ServerHost::connections() const {
  std::lock_guard lock(mu_);
  return conns_.size();
}

void ServerHost::Service(int64_t now) {
  std::vector<wire::Envelope> inbox;
  {
    std::lock_guard lock(mu_);
    while (auto stream = listener_.Accept()) {
      conns_.push_back({std::make_unique<net::FramedConnection>(std::move(stream)), ""});
    }
    for (auto& c : conns_) {
      bool alive = ReadFrames(*c.conn, [&](wire::Envelope env) {
        if (c.site.empty()) {
          c.site = env.src.site;
          // A reconnecting site replaces its old connection.
          for (auto& other : conns_) {
            if (&other != &c && other.site == c.site) other.conn->Close();
          }
        }
        if (env.src.site == c.site) inbox.push_back(std::move(env));
      });
      if (!alive) c.conn->Close();
    }
    std::erase_if(conns_, [](const Conn& c) { return c.conn->IsClosed(); });
  }
  for (const auto& env : inbox) server_->OnEnvelope(env, now);
  server_->Tick(now);
}

std::optional<int64_t> ServerHost::NextWakeup() const { return server_->NextWakeup(); }

class ClientHost::Links : public LinkLayer {
 public:
  explicit Links(std::string site) : site_(std::move(site)) {}

  bool Send(const SiteAddress& from, const SiteAddress& to, const wire::Envelope& env) override {
    std::lock_guard lock(mu_);
    if (!conn_ || conn_->IsClosed() || from != SiteAddress::Control(site_) || !to.is_server()) {
      return false;
    }
    conn_->stream().Write(wire::EncodeEnvelope(env));
    return true;
  }
  bool HasLink(const SiteAddress&, const SiteAddress&) const override { return false; }
  bool OpenDirect(const std::string&, const SiteAddress&, const SiteAddress&) override {
    return false;
  }
  void CloseDirect(const SiteAddress&, const SiteAddress&) override {}

  std::mutex mu_;
  std::string site_;
  std::unique_ptr<net::FramedConnection> conn_;
};

ClientHost::ClientHost(ClientOptions options, std::string host, uint16_t port)
    : host_(std::move(host)), port_(port), links_(std::make_unique<Links>(options.site)) {
  client_ = std::make_unique<ClientProcess>(std::move(options), links_.get());
}

ClientHost::~ClientHost() = default;

bool ClientHost::connected() const {
  std::lock_guard lock(links_->mu_);
  return links_->conn_ && !links_->conn_->IsClosed();
}

std::vector<int> ClientHost::fds() const {
  std::lock_guard lock(links_->mu_);
  if (links_->conn_ && !links_->conn_->IsClosed()) return {links_->conn_->fd()};
  return {};
}

void ClientHost::Redial(int64_t now) {
  if (connected() || now < next_dial_t_) return;
  next_dial_t_ = now + kRedialMs;
  auto stream = net::TcpConnect(host_, port_);
  if (!stream) return;
  std::lock_guard lock(links_->mu_);
  links_->conn_ = std::make_unique<net::FramedConnection>(std::move(stream));
}

void ClientHost::Service(int64_t now) {
  Redial(now);
  std::vector<wire::Envelope> inbox;
  {
    std::lock_guard lock(links_->mu_);
    if (links_->conn_ && !links_->conn_->IsClosed()) {
      bool alive = ReadFrames(*links_->conn_, [&](wire::Envelope env) {
        inbox.push_back(std::move(env));
      });
      if (!alive) links_->conn_->Close();
    }
  }
  for (const auto& env : inbox) client_->OnEnvelope(env, now);
  client_->Tick(now);
}

std::optional<int64_t> ClientHost::NextWakeup() const {
  std::optional<int64_t> next = client_->NextWakeup();
  if (!connected()) Earliest(next, next_dial_t_);
  return next;
}

ControlClient::ControlClient(const std::string& host, uint16_t port, std::string name)
    : name_(std::move(name)),
      ids_(guestfl::SplitMix64(guestfl::Fnv1a("cli/" + name_) ^
                               static_cast<uint64_t>(
                                   std::chrono::system_clock::now().time_since_epoch().count()))) {
  auto stream = net::TcpConnect(host, port);
  if (!stream) {
    throw Error(ErrorCode::kIo, "cannot reach server at " + host + ":" + std::to_string(port));
  }
  conn_ = std::make_unique<net::FramedConnection>(std::move(stream));
  endpoint_ = std::make_unique<reliable::Endpoint>(
      SiteAddress::Control(name_), &ids_, [this](const wire::Envelope& env) {
        if (conn_->IsClosed()) return false;
        conn_->stream().Write(wire::EncodeEnvelope(env));
        return true;
      });
}

ControlClient::~ControlClient() = default;

void ControlClient::Pump(int64_t wait_ms) {
  if (!conn_->IsClosed()) {
    pollfd p{conn_->fd(), POLLIN, 0};
    ::poll(&p, 1, static_cast<int>(wait_ms));
  }
  const int64_t now = clock_.now();
  if (!conn_->IsClosed()) {
    bool alive = ReadFrames(*conn_, [&](const wire::Envelope& env) {
      endpoint_->OnEnvelope(env, now);
    });
    if (!alive) conn_->Close();
  }
  endpoint_->Tick(now);
}

reliable::CallOutcome ControlClient::Call(wire::MessageKind kind, const std::string& job_id,
                                          const std::string& payload,
                                          const reliable::Timeouts& timeouts) {
  if (job_id.empty()) throw Error(ErrorCode::kInvalidConfig, "control call needs a job id");
  std::optional<reliable::CallOutcome> outcome;
  endpoint_->Call(SiteAddress::Server(), kind, job_id, payload, timeouts, clock_.now(),
                  [&](const reliable::CallOutcome& o) { outcome = o; });
  while (!outcome) {
    int64_t wait = 50;
    if (auto next = endpoint_->NextWakeup()) {
      wait = std::clamp<int64_t>(*next - clock_.now(), 0, 50);
    }
    Pump(wait);
  }
  return *outcome;
}

}  // namespace fedbridge::runtime
