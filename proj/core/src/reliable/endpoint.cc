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

#include "fedbridge/reliable/endpoint.h"

#include <algorithm>
#include <exception>
#include <vector>

#include "fedbridge/error.h"

namespace fedbridge::reliable {
namespace {

std::string StatusPayload(ResultStatus status, std::string_view result) {
  std::string out;
  out.reserve(result.size() + 1);
  out.push_back(static_cast<char>(status));
  out.append(result);
  return out;
}

MessageKind ResultKindFor(MessageKind request_kind) {
  return request_kind == MessageKind::kGuestFwd ? MessageKind::kGuestRet
                                                : MessageKind::kResponse;
}

}  // namespace

void Timeouts::Validate() const {
  if (retry_ms <= 0 || query_ms <= 0 || send_deadline_ms <= 0 ||
      result_deadline_ms <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "reliable timeouts must be positive");
  }
}

std::string_view CallStateName(CallState state) {
  switch (state) {
    case CallState::kSending: return "SENDING";
    case CallState::kAwaiting: return "AWAITING";
    case CallState::kDone: return "DONE";
    case CallState::kFailed: return "FAILED";
  }
  return "?";
}

std::string_view FailureName(Failure failure) {
  switch (failure) {
    case Failure::kSendTimeout: return "SendTimeout";
    case Failure::kResultTimeout: return "ResultTimeout";
    case Failure::kAborted: return "Aborted";
  }
  return "?";
}

std::string CallOutcome::Describe() const {
  if (ok()) return "ok";
  if (state == CallState::kDone) return "PeerFault: " + result;
  std::string out(failure ? FailureName(*failure) : "Failed");
  if (!detail.empty()) out += ": " + detail;
  return out;
}

bool ResultCache::InsertPending(const MsgId& id, CacheEntry entry) {
  entry.status = EntryStatus::kPending;
  return entries_.emplace(id, std::move(entry)).second;
}

CacheEntry* ResultCache::Find(const MsgId& id) {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

const CacheEntry* ResultCache::Find(const MsgId& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

void ResultCache::MarkReady(const MsgId& id, bool ok, std::string result,
                            int64_t now) {
  CacheEntry* entry = Find(id);
  if (entry == nullptr || entry->status != EntryStatus::kPending) return;
  entry->status = EntryStatus::kReady;
  entry->ok = ok;
  entry->result = std::move(result);
  entry->ready_t = now;
}

size_t ResultCache::Gc(int64_t now) {
  return std::erase_if(entries_, [&](const auto& item) {
    const CacheEntry& e = item.second;
    return e.status != EntryStatus::kPending && now - e.ready_t >= retention_ms_;
  });
}

Endpoint::Endpoint(SiteAddress self, wire::MsgIdGenerator* ids, SendFn send)
    : Endpoint(std::move(self), ids, std::move(send), Options{}) {}

Endpoint::Endpoint(SiteAddress self, wire::MsgIdGenerator* ids, SendFn send,
                   Options options)
    : self_(std::move(self)),
      ids_(ids),
      send_(std::move(send)),
      options_(options),
      cache_(options.retention_ms) {}

Endpoint::~Endpoint() { *alive_ = false; }

Envelope Endpoint::MakeEnvelope(const SiteAddress& dst, MessageKind kind,
                                const std::string& job_id, std::string payload) {
  Envelope env;
  env.msg_id = ids_->Next();
  env.job_id = job_id;
  env.src = self_;
  env.dst = dst;
  env.kind = kind;
  env.attempt = 1;
  env.payload = std::move(payload);
  return env;
}

MsgId Endpoint::Call(const SiteAddress& dst, MessageKind kind,
                     std::string job_id, std::string payload,
                     const Timeouts& timeouts, int64_t now, CallCallback done) {
  timeouts.Validate();
  if (!wire::IsRequestKind(kind)) {
    throw Error(ErrorCode::kInvalidEnvelope,
                std::string(wire::KindName(kind)) + " is not a request kind");
  }
  now_ = std::max(now_, now);
  ReliableCall call;
  call.msg_id = ids_->Next();
  call.dst = dst;
  call.kind = kind;
  call.job_id = std::move(job_id);
  call.payload = std::move(payload);
  call.timeouts = timeouts;
  call.first_send_t = now;
  MsgId id = call.msg_id;
  auto [it, inserted] = calls_.emplace(id, std::move(call));
  callbacks_.emplace(id, std::move(done));
  active_.insert(id);
  SendRequest(it->second, now);
  return id;
}

void Endpoint::SendRequest(ReliableCall& call, int64_t now) {
  Envelope env;
  env.msg_id = call.msg_id;
  env.job_id = call.job_id;
  env.src = self_;
  env.dst = call.dst;
  env.kind = call.kind;
  env.attempt = ++call.attempts;
  env.payload = call.payload;
  ++stats_.requests_sent;
  bool accepted = send_(env);
  if (call.state == CallState::kSending) {
    if (accepted) {
      call.state = CallState::kAwaiting;
      call.awaiting_since = now;
      call.next_action_t = std::min(now + call.timeouts.query_ms,
                                    now + call.timeouts.result_deadline_ms);
    } else {
      call.next_action_t =
          std::min(now + call.timeouts.retry_ms,
                   call.first_send_t + call.timeouts.send_deadline_ms);
    }
  }
}

bool Endpoint::SendQuery(ReliableCall& call) {
  Envelope env = MakeEnvelope(call.dst, MessageKind::kQuery, call.job_id, {});
  env.correlation_id = call.msg_id;
  ++call.queries;
  ++stats_.queries_sent;
  return send_(env);
}

void Endpoint::Finish(ReliableCall& call, int64_t now) {
  call.completed_t = now;
  call.payload.clear();
  active_.erase(call.msg_id);
  auto cb_it = callbacks_.find(call.msg_id);
  if (cb_it == callbacks_.end()) return;
  CallCallback cb = std::move(cb_it->second);
  callbacks_.erase(cb_it);
  CallOutcome outcome;
  outcome.msg_id = call.msg_id;
  outcome.state = call.state;
  outcome.peer_ok = call.peer_ok;
  outcome.result = call.result.value_or(std::string());
  outcome.failure = call.failure;
  outcome.detail = call.failure_detail;
  outcome.via = call.via;
  outcome.completed_t = call.completed_t;
  outcome.attempts = call.attempts;
  if (cb) cb(outcome);
}

void Endpoint::Tick(int64_t now) {
  now_ = std::max(now_, now);
  // Snapshot: callbacks may start new calls.
  std::vector<MsgId> due;
  for (const MsgId& id : active_) {
    if (calls_.at(id).next_action_t <= now) due.push_back(id);
  }
  for (const MsgId& id : due) {
    auto it = calls_.find(id);
    if (it == calls_.end() || !active_.contains(id)) continue;
    ReliableCall& call = it->second;
    if (call.state == CallState::kSending) {
      if (now >= call.first_send_t + call.timeouts.send_deadline_ms) {
        call.state = CallState::kFailed;
        call.failure = Failure::kSendTimeout;
        call.failure_detail = "no successful send to " + call.dst.ToString() +
                              " after " + std::to_string(call.attempts) +
                              " attempts";
        Finish(call, now);
        continue;
      }
      SendRequest(call, now);
    } else if (call.state == CallState::kAwaiting) {
      int64_t deadline = call.awaiting_since + call.timeouts.result_deadline_ms;
      if (now >= deadline) {
        call.state = CallState::kFailed;
        call.failure = Failure::kResultTimeout;
        call.failure_detail = "no result from " + call.dst.ToString() +
                              " within " +
                              std::to_string(call.timeouts.result_deadline_ms) +
                              " ms";
        Finish(call, now);
        continue;
      }
      SendQuery(call);
      call.next_action_t = std::min(now + call.timeouts.query_ms, deadline);
    }
  }
  if (now >= next_gc_t_) {
    cache_.Gc(now);
    std::erase_if(calls_, [&](const auto& item) {
      const ReliableCall& c = item.second;
      return !active_.contains(item.first) &&
             now - c.completed_t >= options_.call_history_ms;
    });
    next_gc_t_ = now + options_.gc_interval_ms;
  }
}

std::optional<int64_t> Endpoint::NextWakeup() const {
  std::optional<int64_t> next;
  for (const MsgId& id : active_) {
    int64_t t = calls_.at(id).next_action_t;
    if (!next || t < *next) next = t;
  }
  return next;
}

void Endpoint::AbortAll(const std::string& reason, int64_t now) {
  std::vector<MsgId> ids(active_.begin(), active_.end());
  for (const MsgId& id : ids) {
    auto it = calls_.find(id);
    if (it == calls_.end() || !active_.contains(id)) continue;
    it->second.state = CallState::kFailed;
    it->second.failure = Failure::kAborted;
    it->second.failure_detail = reason;
    Finish(it->second, now);
  }
}

const ReliableCall* Endpoint::FindCall(const MsgId& id) const {
  auto it = calls_.find(id);
  return it == calls_.end() ? nullptr : &it->second;
}

void Endpoint::Serve(AsyncHandler handler) { handler_ = std::move(handler); }

void Endpoint::ServeSync(SyncHandler handler) {
  handler_ = [h = std::move(handler)](const Envelope& request, Completion done) {
    done(true, h(request));
  };
}

void Endpoint::Push(const MsgId& request_id, const CacheEntry& entry) {
  Envelope env = MakeEnvelope(
      entry.requester, ResultKindFor(entry.request_kind), entry.job_id,
      StatusPayload(entry.ok ? ResultStatus::kReady : ResultStatus::kFault,
                    entry.result));
  env.correlation_id = request_id;
  ++stats_.results_pushed;
  send_(env);
}

void Endpoint::Reply(const Envelope& query, ResultStatus status,
                     std::string_view result) {
  Envelope env = MakeEnvelope(query.src, MessageKind::kQueryResponse,
                              query.job_id, StatusPayload(status, result));
  env.correlation_id = query.correlation_id;
  ++stats_.queries_answered;
  send_(env);
}

void Endpoint::Complete(const MsgId& id, bool ok, std::string result) {
  CacheEntry* entry = cache_.Find(id);
  if (entry == nullptr || entry->status != EntryStatus::kPending) return;
  cache_.MarkReady(id, ok, std::move(result), now_);
  Push(id, *entry);
}

bool Endpoint::OnEnvelope(const Envelope& env, int64_t now) {
  now_ = std::max(now_, now);
  if (wire::IsRequestKind(env.kind)) {
    if (!handler_) {
      ++stats_.unhandled;
      return true;
    }
    CacheEntry* entry = cache_.Find(env.msg_id);
    if (entry != nullptr) {
      ++stats_.duplicate_requests;
      if (entry->status != EntryStatus::kPending) Push(env.msg_id, *entry);
      return true;
    }
    CacheEntry fresh;
    fresh.requester = env.src;
    fresh.request_kind = env.kind;
    fresh.job_id = env.job_id;
    cache_.InsertPending(env.msg_id, std::move(fresh));
    ++stats_.handler_invocations;
    std::weak_ptr<bool> alive = alive_;
    MsgId id = env.msg_id;
    Completion done = [this, alive, id](bool ok, std::string result) {
      if (alive.expired()) return;
      Complete(id, ok, std::move(result));
    };
    try {
      handler_(env, done);
    } catch (const std::exception& e) {
      Complete(id, false, e.what());
    } catch (...) {
      Complete(id, false, "handler threw a non-standard exception");
    }
    return true;
  }

  switch (env.kind) {
    case MessageKind::kQuery: {
      const CacheEntry* entry = cache_.Find(env.correlation_id);
      if (entry == nullptr) {
        Reply(env, ResultStatus::kUnknown, {});
      } else if (entry->status == EntryStatus::kPending) {
        Reply(env, ResultStatus::kPending, {});
      } else {
        cache_.Find(env.correlation_id)->status = EntryStatus::kConsumed;
        Reply(env, entry->ok ? ResultStatus::kReady : ResultStatus::kFault,
              entry->result);
      }
      return true;
    }
    case MessageKind::kResponse:
    case MessageKind::kGuestRet:
      OnResult(env, ResultPath::kResponse, now);
      return true;
    case MessageKind::kQueryResponse:
      OnResult(env, ResultPath::kQueryResponse, now);
      return true;
    default:
      return false;
  }
}

void Endpoint::OnResult(const Envelope& env, ResultPath path, int64_t now) {
  auto it = calls_.find(env.correlation_id);
  if (it == calls_.end() || !active_.contains(env.correlation_id)) return;
  if (env.payload.empty()) return;
  ReliableCall& call = it->second;
  auto status = static_cast<ResultStatus>(env.payload[0]);
  switch (status) {
    case ResultStatus::kReady:
    case ResultStatus::kFault:
      if (call.state == CallState::kSending) {
        // A retry got through even though an earlier send looked refused.
        call.awaiting_since = now;
      }
      call.state = CallState::kDone;
      call.peer_ok = status == ResultStatus::kReady;
      call.result = env.payload.substr(1);
      call.via = path;
      Finish(call, now);
      break;
    case ResultStatus::kUnknown:
      if (call.state == CallState::kAwaiting) SendRequest(call, now);
      break;
    case ResultStatus::kPending:
      break;
  }
}

}  // namespace fedbridge::reliable
