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

#include "fedbridge/bridge/bridge.h"

#include <algorithm>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fedbridge/error.h"
#include "fedbridge/wire/base64.h"

namespace fedbridge::bridge {

void Transcript::Record(int64_t t_ms, const GuestMessage& m) {
  if (!out_.is_open()) {
    std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) throw Error(ErrorCode::kIo, "cannot open " + path_.string());
  }
  nlohmann::ordered_json j;
  j["t_ms"] = t_ms;
  j["stream_id"] = m.stream_id;
  j["seq"] = m.seq;
  j["direction"] = DirectionName(m.direction);
  j["bytes"] = m.body.size();
  j["body_b64"] = wire::Base64Encode(m.body);
  out_ << j.dump() << '\n';
  out_.flush();
}

LocalGuestServer::LocalGuestServer(Options options, reliable::Endpoint* endpoint,
                                   net::StreamListener* listener, FailureFn on_failure)
    : options_(std::move(options)),
      endpoint_(endpoint),
      listener_(listener),
      on_failure_(std::move(on_failure)) {
  if (!options_.transcript.empty()) transcript_.emplace(options_.transcript);
}

size_t LocalGuestServer::open_streams() const {
  return std::count_if(streams_.begin(), streams_.end(),
                       [](const auto& kv) { return kv.second.open; });
}

void LocalGuestServer::Fail(const std::string& reason, bool peer_fault) {
  if (failed_) return;
  failed_ = true;
  Shutdown();
  if (on_failure_) on_failure_(reason, peer_fault);
}

void LocalGuestServer::Shutdown() {
  shut_down_ = true;
  for (auto& [id, s] : streams_) {
    s.open = false;
    s.queue.clear();
    if (s.conn) s.conn->Close();
  }
}

void LocalGuestServer::Tick(int64_t now) {
  now_ = std::max(now_, now);
  if (shut_down_) return;
  while (auto stream = listener_->Accept()) {
    Stream& s = streams_[next_stream_id_++];
    s.conn = std::make_unique<net::FramedConnection>(std::move(stream));
    ++stats_.streams;
  }
  for (auto& [id, s] : streams_) {
    if (!s.open) continue;
    try {
      while (auto body = s.conn->ReadFrame()) s.queue.push_back(std::move(*body));
    } catch (const Error& e) {
      ++stats_.resets;
      s.conn->Close();
      s.open = false;
      s.queue.clear();
      Fail("guest stream " + std::to_string(id) + " reset: " + e.what(), true);
      return;
    }
    if (s.conn->PeerClosed()) {
      // Requests already read are still forwarded; their responses are
      // dropped on arrival.
      s.open = false;
      s.conn->Close();
    }
  }
  for (auto& [id, s] : streams_) {
    if (!s.in_flight && !s.queue.empty()) Forward(id, s, now_);
  }
  std::erase_if(streams_, [](const auto& kv) {
    return !kv.second.open && !kv.second.in_flight && kv.second.queue.empty();
  });
}

void LocalGuestServer::Forward(uint64_t id, Stream& s, int64_t now) {
  GuestMessage m{id, s.next_seq++, Direction::kToLink, std::move(s.queue.front())};
  s.queue.pop_front();
  s.in_flight = true;
  if (transcript_) transcript_->Record(now, m);
  ++stats_.forwarded;
  const uint64_t seq = m.seq;
  endpoint_->Call(options_.server_worker, wire::MessageKind::kGuestFwd, options_.job_id,
                  EncodeGuestMessage(m), options_.timeouts, now,
                  [this, id, seq](const reliable::CallOutcome& outcome) {
                    OnResult(id, seq, outcome);
                  });
}

void LocalGuestServer::OnResult(uint64_t id, uint64_t seq,
                                const reliable::CallOutcome& outcome) {
  auto it = streams_.find(id);
  if (it != streams_.end()) it->second.in_flight = false;
  if (!outcome.ok()) {
    bool peer_fault = outcome.state == reliable::CallState::kDone;
    Fail("GUEST_FWD " + outcome.msg_id.ToHex() + " for stream " + std::to_string(id) +
             " seq " + std::to_string(seq) + ": " + outcome.Describe(),
         peer_fault);
    return;
  }
  GuestMessage reply;
  try {
    reply = DecodeGuestMessage(outcome.result);
  } catch (const Error& e) {
    Fail(std::string("bad GUEST_RET: ") + e.what(), true);
    return;
  }
  if (reply.stream_id != id || reply.seq != seq || reply.direction != Direction::kToNode) {
    Fail("GUEST_RET does not match stream " + std::to_string(id) + " seq " +
             std::to_string(seq),
         true);
    return;
  }
  if (it == streams_.end() || !it->second.open) {
    ++stats_.dropped_closed;
    spdlog::info("lgs {}: dropping response for closed stream {} seq {}",
                 options_.self.ToString(), id, seq);
    return;
  }
  if (transcript_) transcript_->Record(now_, reply);
  it->second.conn->WriteFrame(reply.body);
  ++stats_.delivered;
}

std::optional<int64_t> LocalGuestServer::NextWakeup() const {
  if (shut_down_) return std::nullopt;
  if (listener_->HasPending()) return now_;
  for (const auto& [id, s] : streams_) {
    if (s.open && s.conn->HasInput()) return now_;
    if (!s.in_flight && !s.queue.empty()) return now_;
  }
  return std::nullopt;
}

void LocalGuestClient::Handle(const wire::Envelope& request,
                              reliable::Endpoint::Completion done) {
  GuestMessage m;
  try {
    m = DecodeGuestMessage(request.payload);
  } catch (const Error& e) {
    done(false, std::string("malformed guest message: ") + e.what());
    return;
  }
  if (m.direction != Direction::kToLink) {
    done(false, "GUEST_FWD must carry a TO_LINK message");
    return;
  }
  auto key = std::make_pair(request.src.site, m.stream_id);
  auto it = conns_.find(key);
  if (it == conns_.end()) {
    auto stream = dialer_->Dial();
    if (!stream) {
      ++stats_.dial_failures;
      done(false, "guest link unreachable");
      return;
    }
    ++stats_.connections;
    it = conns_.emplace(key, Conn{std::make_unique<net::FramedConnection>(std::move(stream)), {}})
             .first;
  }
  it->second.conn->WriteFrame(m.body);
  it->second.waiting.push_back({m.seq, std::move(done)});
  ++stats_.forwarded;
}

void LocalGuestClient::Tick(int64_t now) {
  now_ = std::max(now_, now);
  for (auto it = conns_.begin(); it != conns_.end();) {
    Conn& c = it->second;
    try {
      while (!c.waiting.empty()) {
        auto body = c.conn->ReadFrame();
        if (!body) break;
        Waiting w = std::move(c.waiting.front());
        c.waiting.pop_front();
        ++stats_.returned;
        w.done(true, EncodeGuestMessage(
                         {it->first.second, w.seq, Direction::kToNode, std::move(*body)}));
      }
    } catch (const Error& e) {
      c.conn->Close();
    }
    if (c.conn->PeerClosed() || c.conn->IsClosed()) {
      for (auto& w : c.waiting) w.done(false, "guest link closed the connection");
      it = conns_.erase(it);
    } else {
      ++it;
    }
  }
}

std::optional<int64_t> LocalGuestClient::NextWakeup() const {
  for (const auto& [key, c] : conns_) {
    if (c.conn->HasInput()) return now_;
  }
  return std::nullopt;
}

void LocalGuestClient::Shutdown() {
  for (auto& [key, c] : conns_) {
    c.conn->Close();
    for (auto& w : c.waiting) w.done(false, "server worker shutting down");
  }
  conns_.clear();
}

}  // namespace fedbridge::bridge
