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

#include "fedbridge/runtime/workers.h"

#include <algorithm>

#include "fedbridge/error.h"
#include "fedbridge/guestfl/client_app.h"

namespace fedbridge::runtime {
namespace {

using nlohmann::json;

void Earliest(std::optional<int64_t>& acc, std::optional<int64_t> t) {
  if (t && (!acc || *t < *acc)) acc = t;
}

}  // namespace

std::string Deployment::ToJson() const {
  json j;
  j["job"] = JobSpecToJson(spec);
  j["app"] = guestfl::AppConfigToJson(app);
  j["participants"] = participants;
  return j.dump();
}

Deployment Deployment::FromJson(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("job") || !j.contains("app") ||
      !j.contains("participants") || !j["participants"].is_array()) {
    throw Error(ErrorCode::kMalformed, "bad deployment payload");
  }
  Deployment d;
  d.spec = ParseJobSpec(j["job"]);
  d.app = guestfl::ParseAppConfig(j["app"]);
  for (const auto& p : j["participants"]) {
    if (!p.is_string()) throw Error(ErrorCode::kMalformed, "bad participant");
    d.participants.push_back(p.get<std::string>());
  }
  return d;
}

uint64_t WorkerIdNamespace(const JobSpec& spec, const std::string& site) {
  return guestfl::SplitMix64(spec.seed ^ guestfl::Fnv1a(spec.job_id + "/" + site));
}

ClientWorker::ClientWorker(std::string site, Deployment deployment,
                           std::filesystem::path runs_dir, EnvelopeSendFn send,
                           FailureFn on_failure)
    : address_{site, deployment.spec.job_id},
      deployment_(std::move(deployment)),
      on_failure_(std::move(on_failure)),
      ids_(WorkerIdNamespace(deployment_.spec, site)) {
  const JobSpec& spec = deployment_.spec;
  const wire::SiteAddress server_worker{std::string(wire::kServerSite), spec.job_id};
  endpoint_ = std::make_unique<reliable::Endpoint>(address_, &ids_, send);
  endpoint_->ServeSync([](const wire::Envelope& req) { return req.payload; });
  if (spec.tracking) {
    writer_ = std::make_unique<tracking::MetricWriter>(spec.job_id, address_, server_worker,
                                                       &ids_, send, spec.reliable.retry_ms);
  }
  net::StreamListener* listener = &inproc_listener_;
  if (spec.bridge.lgs_port != 0) {
    uint16_t port = spec.bridge.lgs_port < 0 ? 0 : static_cast<uint16_t>(spec.bridge.lgs_port);
    try {
      tcp_listener_ = std::make_unique<net::TcpListener>(port);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kIo, "LGS listen on port " + std::to_string(port) + ": " + e.what());
    }
    listener = tcp_listener_.get();
  }
  bridge::LocalGuestServer::Options o;
  o.job_id = spec.job_id;
  o.self = address_;
  o.server_worker = server_worker;
  o.timeouts = spec.reliable;
  if (!runs_dir.empty()) o.transcript = runs_dir / spec.job_id / site / "bridge.jsonl";
  lgs_ = std::make_unique<bridge::LocalGuestServer>(
      o, endpoint_.get(), listener,
      [this](const std::string& reason, bool peer_fault) { Fail(reason, peer_fault); });
}

void ClientWorker::Start(int64_t now) {
  if (started_ || stopped_) return;
  started_ = true;
  now_ = now;
  if (deployment_.spec.bridge.external_nodes) return;
  if (tcp_listener_) {
    node_dialer_ = std::make_unique<net::TcpDialer>("127.0.0.1", tcp_listener_->port());
  } else {
    node_dialer_ = std::make_unique<net::InProcDialer>(&inproc_listener_);
  }
  const auto& app = deployment_.app;
  guestfl::ClientApp client(app.MakeSiteData(address_.site), app.epochs, app.lr, writer_.get());
  node_ = std::make_unique<guestfl::GuestNode>(address_.site, std::move(client),
                                               node_dialer_.get(), app.poll_ms);
}

void ClientWorker::OnEnvelope(const wire::Envelope& env, int64_t now) {
  now_ = std::max(now_, now);
  if (env.kind == wire::MessageKind::kAck) {
    if (writer_) writer_->OnAck(env);
    return;
  }
  endpoint_->OnEnvelope(env, now);
}

void ClientWorker::Stop(int64_t now) {
  if (stopped_) return;
  stopped_ = true;
  node_.reset();
  lgs_->Shutdown();
  endpoint_->AbortAll("job stopping", now);
  if (writer_) writer_->Flush();
}

void ClientWorker::Fail(const std::string& reason, bool peer_fault) {
  if (stopped_ || failed_) return;
  failed_ = true;
  if (on_failure_) on_failure_(reason, peer_fault);
}

void ClientWorker::Tick(int64_t now) {
  now_ = std::max(now_, now);
  endpoint_->Tick(now_);
  if (writer_) writer_->Tick(now_);
  if (node_) {
    node_->Tick(now_);
    if (node_->failed() && !stopped_) Fail("guest node failed: " + node_->failure(), true);
  }
  if (!stopped_) lgs_->Tick(now_);
}

std::optional<int64_t> ClientWorker::NextWakeup() const {
  std::optional<int64_t> next = endpoint_->NextWakeup();
  if (writer_) Earliest(next, writer_->NextWakeup());
  if (node_ && !node_->finished()) Earliest(next, node_->NextWakeup());
  if (!stopped_) Earliest(next, lgs_->NextWakeup());
  return next;
}

ServerWorker::ServerWorker(Deployment deployment, EnvelopeSendFn send)
    : address_{std::string(wire::kServerSite), deployment.spec.job_id},
      deployment_(std::move(deployment)),
      ids_(WorkerIdNamespace(deployment_.spec, std::string(wire::kServerSite))),
      link_(deployment_.app, deployment_.participants.size()),
      link_dialer_(&link_listener_),
      link_server_(&link_, &link_listener_) {
  endpoint_ = std::make_unique<reliable::Endpoint>(address_, &ids_, std::move(send));
  lgc_ = std::make_unique<bridge::LocalGuestClient>(&link_dialer_);
  endpoint_->Serve([this](const wire::Envelope& req, reliable::Endpoint::Completion done) {
    if (req.kind == wire::MessageKind::kGuestFwd) return lgc_->Handle(req, std::move(done));
    done(true, req.payload);
  });
}

void ServerWorker::OnEnvelope(const wire::Envelope& env, int64_t now) {
  endpoint_->OnEnvelope(env, now);
}

void ServerWorker::Stop(int64_t now) {
  if (stopped_) return;
  stopped_ = true;
  endpoint_->AbortAll("job stopping", now);
  lgc_->Shutdown();
  link_listener_.Shutdown();
}

bool ServerWorker::finished() const {
  if (link_.state() == guestfl::GuestLink::State::kFailed) return true;
  if (!done_since_) return false;
  return link_.released_all() ||
         now_ - *done_since_ >= deployment_.spec.reliable.send_deadline_ms;
}

void ServerWorker::Tick(int64_t now) {
  now_ = std::max(now_, now);
  endpoint_->Tick(now);
  if (stopped_) return;
  lgc_->Tick(now);
  link_server_.Tick(now);
  lgc_->Tick(now);
  if (!done_since_ && link_.state() == guestfl::GuestLink::State::kDone) done_since_ = now_;
}

std::optional<int64_t> ServerWorker::NextWakeup() const {
  std::optional<int64_t> next = endpoint_->NextWakeup();
  if (stopped_) return next;
  Earliest(next, lgc_->NextWakeup());
  Earliest(next, link_server_.NextWakeup());
  if (done_since_ && !link_.released_all()) {
    Earliest(next, *done_since_ + deployment_.spec.reliable.send_deadline_ms);
  }
  return next;
}

}  // namespace fedbridge::runtime
