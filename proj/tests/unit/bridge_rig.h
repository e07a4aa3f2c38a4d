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

#ifndef FEDBRIDGE_TESTS_BRIDGE_RIG_H_
#define FEDBRIDGE_TESTS_BRIDGE_RIG_H_

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fedbridge/bridge/bridge.h"
#include "fedbridge/netsim/fabric.h"
#include "fedbridge/wire/codec.h"

namespace fedbridge::testing {

// Answers every frame on every accepted connection with fn(body, conn_index).
class FrameResponder : public net::Actor {
 public:
  using Fn = std::function<std::string(const std::string& body, size_t conn)>;
  FrameResponder(net::StreamListener* listener, Fn fn) : listener_(listener), fn_(std::move(fn)) {}

  void Tick(int64_t now) override {
    now_ = now;
    while (auto s = listener_->Accept()) {
      conns_.push_back(std::make_unique<net::FramedConnection>(std::move(s)));
    }
    for (size_t i = 0; i < conns_.size(); ++i) {
      auto& c = conns_[i];
      if (c->IsClosed()) continue;
      while (auto body = c->ReadFrame()) {
        received.push_back(*body);
        c->WriteFrame(fn_(*body, i));
      }
      if (c->PeerClosed()) c->Close();
    }
  }
  std::optional<int64_t> NextWakeup() const override {
    if (listener_->HasPending()) return now_;
    for (const auto& c : conns_) {
      if (!c->IsClosed() && c->HasInput()) return now_;
    }
    return std::nullopt;
  }
  std::vector<std::string> received;

 private:
  net::StreamListener* listener_;
  Fn fn_;
  std::vector<std::unique_ptr<net::FramedConnection>> conns_;
  int64_t now_ = 0;
};

// A guest that sends a fixed list of requests one at a time and records
// (request, response) pairs.
class ScriptedGuest : public net::Actor {
 public:
  ScriptedGuest(net::StreamDialer* dialer, std::vector<std::string> script)
      : dialer_(dialer), script_(std::move(script)) {}

  void Tick(int64_t now) override {
    now_ = now;
    if (!conn_ && !gave_up_) {
      auto s = dialer_->Dial();
      if (!s) {
        gave_up_ = true;
        return;
      }
      conn_ = std::make_unique<net::FramedConnection>(std::move(s));
    }
    if (!conn_) return;
    while (true) {
      if (!awaiting_ && next_ < script_.size()) {
        conn_->WriteFrame(script_[next_]);
        transcript.push_back(script_[next_]);
        awaiting_ = true;
      }
      if (!awaiting_) break;
      auto body = conn_->ReadFrame();
      if (!body) break;
      transcript.push_back(*body);
      responses.push_back(*body);
      awaiting_ = false;
      ++next_;
    }
  }
  std::optional<int64_t> NextWakeup() const override {
    if (!conn_ && !gave_up_) return now_;
    if (conn_ && awaiting_ && conn_->HasInput()) return now_;
    return std::nullopt;
  }
  bool done() const { return next_ == script_.size(); }
  void Close() { if (conn_) conn_->Close(); }

  std::vector<std::string> transcript;
  std::vector<std::string> responses;

 private:
  net::StreamDialer* dialer_;
  std::vector<std::string> script_;
  std::unique_ptr<net::FramedConnection> conn_;
  size_t next_ = 0;
  bool awaiting_ = false;
  bool gave_up_ = false;
  int64_t now_ = 0;
};

// Client workers for `sites` and one server worker, each client joined to
// the server by its own fabric link, with an LGS per site and the LGC on the
// server dialing `link_dialer`.
class BridgeRig {
 public:
  struct Site {
    wire::SiteAddress address;
    std::unique_ptr<wire::MsgIdGenerator> ids;
    std::unique_ptr<reliable::Endpoint> endpoint;
    net::InProcListener listener;
    std::unique_ptr<bridge::LocalGuestServer> lgs;
    std::vector<std::pair<std::string, bool>> failures;
    netsim::LinkId link;
  };

  inline static const std::string kJob = "job-b";

  BridgeRig(const std::vector<std::string>& sites, const netsim::LinkPolicy& policy,
            net::StreamDialer* link_dialer, reliable::Timeouts timeouts = FastTimeouts(),
            std::string transcript_dir = {})
      : server_ids_(1000),
        server_(server_address(), &server_ids_,
                [this](const wire::Envelope& e) { return SendFromServer(e); }),
        lgc_(link_dialer) {
    server_.Serve([this](const wire::Envelope& req, reliable::Endpoint::Completion done) {
      if (req.kind != wire::MessageKind::kGuestFwd) return done(false, "unexpected kind");
      lgc_.Handle(req, std::move(done));
    });
    uint64_t ns = 1;
    for (const auto& name : sites) {
      auto site = std::make_unique<Site>();
      Site* raw = site.get();
      site->address = {name, kJob};
      site->ids = std::make_unique<wire::MsgIdGenerator>(ns++);
      site->endpoint = std::make_unique<reliable::Endpoint>(
          site->address, site->ids.get(),
          [this, raw](const wire::Envelope& e) {
            return fabric.Send(raw->link, raw->address, wire::EncodeEnvelope(e));
          });
      netsim::LinkPolicy p = policy;
      p.seed = policy.seed * 131 + ns;
      site->link = fabric.Connect(site->address, server_address(), p);
      bridge::LocalGuestServer::Options o;
      o.job_id = kJob;
      o.self = site->address;
      o.server_worker = server_address();
      o.timeouts = timeouts;
      if (!transcript_dir.empty()) o.transcript = transcript_dir + "/" + name + "/bridge.jsonl";
      site->lgs = std::make_unique<bridge::LocalGuestServer>(
          o, site->endpoint.get(), &site->listener,
          [raw](const std::string& reason, bool peer_fault) {
            raw->failures.emplace_back(reason, peer_fault);
          });
      sites_[name] = std::move(site);
    }
  }

  static reliable::Timeouts FastTimeouts() {
    reliable::Timeouts t;
    t.retry_ms = 20;
    t.query_ms = 40;
    t.send_deadline_ms = 60'000;
    t.result_deadline_ms = 600'000;
    return t;
  }
  static wire::SiteAddress server_address() { return {"server", kJob}; }

  Site& site(const std::string& name) { return *sites_.at(name); }
  void Add(net::Actor* actor) { actors_.push_back(actor); }

  bool RunUntil(const std::function<bool()>& done, int64_t limit) {
    while (!done()) {
      std::optional<int64_t> next = fabric.NextDueMs();
      auto consider = [&](std::optional<int64_t> t) {
        if (t && (!next || *t < *next)) next = t;
      };
      consider(server_.NextWakeup());
      consider(lgc_.NextWakeup());
      for (auto& [name, s] : sites_) {
        consider(s->endpoint->NextWakeup());
        consider(s->lgs->NextWakeup());
      }
      for (auto* a : actors_) consider(a->NextWakeup());
      if (!next || *next > limit) return false;
      const int64_t t = std::max(*next, fabric.now_ms());
      for (auto& d : fabric.Step(t - fabric.now_ms())) {
        wire::Envelope env = wire::DecodeEnvelope(d.frame);
        if (d.to == server_address()) {
          server_.OnEnvelope(env, t);
        } else {
          sites_.at(d.to.site)->endpoint->OnEnvelope(env, t);
        }
      }
      for (auto* a : actors_) a->Tick(t);
      for (auto& [name, s] : sites_) s->lgs->Tick(t);
      lgc_.Tick(t);
      server_.Tick(t);
      for (auto& [name, s] : sites_) s->endpoint->Tick(t);
      if (++iterations_ > 50'000'000) return false;
    }
    return true;
  }

  netsim::Fabric fabric;
  reliable::Endpoint& server() { return server_; }
  bridge::LocalGuestClient& lgc() { return lgc_; }

 private:
  bool SendFromServer(const wire::Envelope& e) {
    Site& s = *sites_.at(e.dst.site);
    return fabric.Send(s.link, server_address(), wire::EncodeEnvelope(e));
  }

  wire::MsgIdGenerator server_ids_;
  reliable::Endpoint server_;
  bridge::LocalGuestClient lgc_;
  std::map<std::string, std::unique_ptr<Site>> sites_;
  std::vector<net::Actor*> actors_;
  uint64_t iterations_ = 0;
};

}  // namespace fedbridge::testing

#endif  // FEDBRIDGE_TESTS_BRIDGE_RIG_H_
