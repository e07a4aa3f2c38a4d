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

#ifndef FEDBRIDGE_RUNTIME_WORKERS_H_
#define FEDBRIDGE_RUNTIME_WORKERS_H_

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedbridge/bridge/bridge.h"
#include "fedbridge/guestfl/app_config.h"
#include "fedbridge/guestfl/node.h"
#include "fedbridge/guestfl/server_app.h"
#include "fedbridge/net/actor.h"
#include "fedbridge/net/stream.h"
#include "fedbridge/reliable/endpoint.h"
#include "fedbridge/runtime/job.h"
#include "fedbridge/tracking/metrics.h"

namespace fedbridge::runtime {

// Everything a worker is created from; shipped in the DEPLOY payload.
struct Deployment {
  JobSpec spec;
  guestfl::AppConfig app;
  std::vector<std::string> participants;

  std::string ToJson() const;
  // Throws Error(kMalformed) or Error(kInvalidConfig).
  static Deployment FromJson(std::string_view text);
};

// Message ids of one worker; independent of other jobs' traffic.
uint64_t WorkerIdNamespace(const JobSpec& spec, const std::string& site);

using EnvelopeSendFn = std::function<bool(const wire::Envelope&)>;

// A client site's job worker: LGS, in-process guest node and metric writer.
class ClientWorker : public net::Actor {
 public:
  using FailureFn = std::function<void(const std::string& reason, bool peer_fault)>;

  // Throws Error(kIo) when the LGS port cannot be bound.
  ClientWorker(std::string site, Deployment deployment, std::filesystem::path runs_dir,
               EnvelopeSendFn send, FailureFn on_failure);

  // Launches the guest node (unless nodes are external).
  void Start(int64_t now);
  void OnEnvelope(const wire::Envelope& env, int64_t now);
  // Stops the guest traffic and flushes metrics; later failures are ignored.
  void Stop(int64_t now);
  bool stopped() const { return stopped_; }
  bool drained() const { return !writer_ || writer_->drained(); }

  void Tick(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;

  const wire::SiteAddress& address() const { return address_; }
  const std::string& job_id() const { return deployment_.spec.job_id; }
  uint16_t lgs_port() const { return tcp_listener_ ? tcp_listener_->port() : 0; }
  reliable::Endpoint& endpoint() { return *endpoint_; }
  bridge::LocalGuestServer& lgs() { return *lgs_; }
  guestfl::GuestNode* node() { return node_.get(); }
  tracking::MetricWriter* writer() { return writer_.get(); }

 private:
  void Fail(const std::string& reason, bool peer_fault);

  wire::SiteAddress address_;
  Deployment deployment_;
  FailureFn on_failure_;
  wire::MsgIdGenerator ids_;
  std::unique_ptr<reliable::Endpoint> endpoint_;
  std::unique_ptr<tracking::MetricWriter> writer_;
  net::InProcListener inproc_listener_;
  std::unique_ptr<net::TcpListener> tcp_listener_;
  std::unique_ptr<net::StreamDialer> node_dialer_;
  std::unique_ptr<bridge::LocalGuestServer> lgs_;
  std::unique_ptr<guestfl::GuestNode> node_;
  bool started_ = false;
  bool stopped_ = false;
  bool failed_ = false;
  int64_t now_ = 0;
};

// The server-side job worker: guest link plus server app, and the LGC that
// replays bridged traffic into it.
class ServerWorker : public net::Actor {
 public:
  ServerWorker(Deployment deployment, EnvelopeSendFn send);

  void OnEnvelope(const wire::Envelope& env, int64_t now);
  void Stop(int64_t now);

  void Tick(int64_t now) override;
  std::optional<int64_t> NextWakeup() const override;

  const wire::SiteAddress& address() const { return address_; }
  const std::string& job_id() const { return deployment_.spec.job_id; }
  const guestfl::GuestLink& link() const { return link_; }
  // The app failed, or it is done and its nodes were told so (or stopped
  // asking for send_deadline_ms).
  bool finished() const;
  reliable::Endpoint& endpoint() { return *endpoint_; }
  bridge::LocalGuestClient& lgc() { return *lgc_; }

 private:
  wire::SiteAddress address_;
  Deployment deployment_;
  wire::MsgIdGenerator ids_;
  std::unique_ptr<reliable::Endpoint> endpoint_;
  guestfl::GuestLink link_;
  net::InProcListener link_listener_;
  net::InProcDialer link_dialer_;
  guestfl::GuestLinkServer link_server_;
  std::unique_ptr<bridge::LocalGuestClient> lgc_;
  bool stopped_ = false;
  int64_t now_ = 0;
  std::optional<int64_t> done_since_;
};

}  // namespace fedbridge::runtime

#endif  // FEDBRIDGE_RUNTIME_WORKERS_H_
