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

#ifndef FEDBRIDGE_RELIABLE_ENDPOINT_H_
#define FEDBRIDGE_RELIABLE_ENDPOINT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "fedbridge/wire/envelope.h"

namespace fedbridge::reliable {

using wire::Envelope;
using wire::MessageKind;
using wire::MsgId;
using wire::SiteAddress;

struct Timeouts {
  int64_t retry_ms = 250;
  int64_t query_ms = 500;
  int64_t send_deadline_ms = 30'000;
  int64_t result_deadline_ms = 600'000;

  // Throws Error(kInvalidConfig) unless every duration is positive.
  void Validate() const;
  bool operator==(const Timeouts&) const = default;
};

enum class CallState { kSending, kAwaiting, kDone, kFailed };
enum class Failure { kSendTimeout, kResultTimeout, kAborted };
enum class ResultPath { kNone, kResponse, kQueryResponse };

std::string_view CallStateName(CallState state);
std::string_view FailureName(Failure failure);

// Requester-side record of one request/response exchange.
struct ReliableCall {
  MsgId msg_id;
  SiteAddress dst;
  MessageKind kind = MessageKind::kRequest;
  std::string job_id;
  CallState state = CallState::kSending;
  std::string payload;
  Timeouts timeouts;
  int64_t first_send_t = 0;
  int64_t awaiting_since = 0;
  int64_t next_action_t = 0;
  int64_t completed_t = 0;
  uint32_t attempts = 0;
  uint32_t queries = 0;
  bool peer_ok = false;  // meaningful once DONE; false means PeerFault
  std::optional<std::string> result;
  std::optional<Failure> failure;
  std::string failure_detail;
  ResultPath via = ResultPath::kNone;
};

struct CallOutcome {
  MsgId msg_id;
  CallState state = CallState::kFailed;
  bool peer_ok = false;
  std::string result;
  std::optional<Failure> failure;
  std::string detail;
  ResultPath via = ResultPath::kNone;
  int64_t completed_t = 0;
  uint32_t attempts = 0;

  // DONE and the peer reported success.
  bool ok() const { return state == CallState::kDone && peer_ok; }
  // Human-readable reason for anything other than ok().
  std::string Describe() const;
};

// Status byte leading every RESPONSE, GUEST_RET and QUERY_RESPONSE payload.
enum class ResultStatus : char {
  kPending = 'P',
  kReady = 'R',
  kFault = 'F',
  kUnknown = 'U',
};

enum class EntryStatus { kPending, kReady, kConsumed };

struct CacheEntry {
  EntryStatus status = EntryStatus::kPending;
  bool ok = false;
  std::string result;
  int64_t ready_t = 0;
  SiteAddress requester;
  MessageKind request_kind = MessageKind::kRequest;
  std::string job_id;
};

// Responder-side store keyed by request msg_id. One entry per executed
// request; READY and CONSUMED entries live at least `retention_ms`.
class ResultCache {
 public:
  explicit ResultCache(int64_t retention_ms) : retention_ms_(retention_ms) {}

  // False if the id is already present.
  bool InsertPending(const MsgId& id, CacheEntry entry);
  CacheEntry* Find(const MsgId& id);
  const CacheEntry* Find(const MsgId& id) const;
  void MarkReady(const MsgId& id, bool ok, std::string result, int64_t now);
  // Evicts READY/CONSUMED entries with now - ready_t >= retention_ms.
  size_t Gc(int64_t now);

  size_t size() const { return entries_.size(); }
  int64_t retention_ms() const { return retention_ms_; }
  const std::map<MsgId, CacheEntry>& entries() const { return entries_; }

 private:
  int64_t retention_ms_;
  std::map<MsgId, CacheEntry> entries_;
};

struct EndpointStats {
  uint64_t handler_invocations = 0;
  uint64_t duplicate_requests = 0;
  uint64_t results_pushed = 0;
  uint64_t queries_answered = 0;
  uint64_t requests_sent = 0;
  uint64_t queries_sent = 0;
  uint64_t unhandled = 0;
};

// Implements retried sends, responder-side dedup with result retention and
// push, and requester-side result polling. Single-threaded: every method must
// be called from the owning event loop.
class Endpoint {
 public:
  using SendFn = std::function<bool(const Envelope&)>;
  using Completion = std::function<void(bool ok, std::string result)>;
  using AsyncHandler = std::function<void(const Envelope& request, Completion done)>;
  using SyncHandler = std::function<std::string(const Envelope& request)>;
  using CallCallback = std::function<void(const CallOutcome&)>;

  struct Options {
    int64_t retention_ms = 300'000;
    int64_t gc_interval_ms = 1'000;
    // Terminal call records are forgotten this long after completion.
    int64_t call_history_ms = 60'000;
  };

  Endpoint(SiteAddress self, wire::MsgIdGenerator* ids, SendFn send);
  Endpoint(SiteAddress self, wire::MsgIdGenerator* ids, SendFn send,
           Options options);
  ~Endpoint();
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  // Starts a call. The first REQUEST goes out immediately; `done` fires once,
  // from within OnEnvelope/Tick/AbortAll, when the call terminates.
  MsgId Call(const SiteAddress& dst, MessageKind kind, std::string job_id,
             std::string payload, const Timeouts& timeouts, int64_t now,
             CallCallback done);

  // Installs the responder. The handler runs at most once per msg_id.
  void Serve(AsyncHandler handler);
  void ServeSync(SyncHandler handler);

  // Consumes reliability traffic addressed to this endpoint. Returns false
  // for kinds this layer does not own.
  bool OnEnvelope(const Envelope& env, int64_t now);
  void Tick(int64_t now);
  std::optional<int64_t> NextWakeup() const;

  // Fails every in-flight call with Failure::kAborted.
  void AbortAll(const std::string& reason, int64_t now);
  size_t GcResults(int64_t now) { return cache_.Gc(now); }

  const ReliableCall* FindCall(const MsgId& id) const;
  size_t in_flight() const { return active_.size(); }
  const ResultCache& cache() const { return cache_; }
  const EndpointStats& stats() const { return stats_; }
  const SiteAddress& address() const { return self_; }

 private:
  void SendRequest(ReliableCall& call, int64_t now);
  bool SendQuery(ReliableCall& call);
  void Push(const MsgId& request_id, const CacheEntry& entry);
  void Reply(const Envelope& query, ResultStatus status, std::string_view result);
  void Finish(ReliableCall& call, int64_t now);
  void Complete(const MsgId& id, bool ok, std::string result);
  void OnResult(const Envelope& env, ResultPath path, int64_t now);
  Envelope MakeEnvelope(const SiteAddress& dst, MessageKind kind,
                        const std::string& job_id, std::string payload);

  SiteAddress self_;
  wire::MsgIdGenerator* ids_;
  SendFn send_;
  Options options_;
  AsyncHandler handler_;
  ResultCache cache_;
  std::map<MsgId, ReliableCall> calls_;
  std::map<MsgId, CallCallback> callbacks_;
  std::set<MsgId> active_;
  EndpointStats stats_;
  int64_t now_ = 0;
  int64_t next_gc_t_ = 0;
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

}  // namespace fedbridge::reliable

#endif  // FEDBRIDGE_RELIABLE_ENDPOINT_H_
