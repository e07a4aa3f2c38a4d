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

#ifndef FEDBRIDGE_WIRE_ENVELOPE_H_
#define FEDBRIDGE_WIRE_ENVELOPE_H_

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace fedbridge::wire {

// 128-bit message identifier, rendered as 32 lowercase hex characters.
class MsgId {
 public:
  MsgId() = default;
  MsgId(uint64_t hi, uint64_t lo) : hi_(hi), lo_(lo) {}

  static MsgId Zero() { return MsgId(); }
  // Accepts exactly 32 lowercase hex digits.
  static std::optional<MsgId> FromHex(std::string_view hex);

  std::string ToHex() const;
  bool IsZero() const { return hi_ == 0 && lo_ == 0; }
  uint64_t hi() const { return hi_; }
  uint64_t lo() const { return lo_; }

  auto operator<=>(const MsgId&) const = default;

 private:
  uint64_t hi_ = 0;
  uint64_t lo_ = 0;
};

// Issues ids that are unique for the lifetime of the generator: the high half
// is a scrambled namespace, the low half a counter.
class MsgIdGenerator {
 public:
  explicit MsgIdGenerator(uint64_t id_namespace);
  MsgId Next();

 private:
  uint64_t hi_;
  uint64_t counter_ = 0;
};

inline constexpr std::string_view kServerSite = "server";
inline constexpr size_t kMaxSiteBytes = 32;
inline constexpr size_t kMaxJobIdBytes = 64;

struct SiteAddress {
  std::string site;
  std::string worker;  // empty for control processes

  static SiteAddress Control(std::string site) { return {std::move(site), {}}; }
  static SiteAddress Server() { return {std::string(kServerSite), {}}; }

  bool is_control() const { return worker.empty(); }
  bool is_server() const { return site == kServerSite; }
  SiteAddress control() const { return {site, {}}; }
  // "site" for control processes, "site/worker" otherwise.
  std::string ToString() const;

  auto operator<=>(const SiteAddress&) const = default;
};

// [a-z0-9_-]+, at most kMaxSiteBytes.
bool IsValidSiteName(std::string_view name);

enum class MessageKind : uint8_t {
  kRequest,
  kResponse,
  kQuery,
  kQueryResponse,
  kAck,
  kSubmit,
  kDeploy,
  kStatus,
  kAbort,
  kHeartbeat,
  kMetric,
  kGuestFwd,
  kGuestRet,
};

std::string_view KindName(MessageKind kind);
std::optional<MessageKind> ParseKind(std::string_view name);

// SUBMIT, STATUS, ABORT and HEARTBEAT may travel without a job id.
bool IsControlKind(MessageKind kind);
// Kinds the reliability layer treats as requests to execute.
bool IsRequestKind(MessageKind kind);
// Kinds carrying a pushed result for a request.
bool IsResultKind(MessageKind kind);

struct Envelope {
  MsgId msg_id;
  MsgId correlation_id;  // zero for requests
  std::string job_id;
  SiteAddress src;
  SiteAddress dst;
  MessageKind kind = MessageKind::kRequest;
  uint32_t attempt = 1;
  std::string payload;

  bool operator==(const Envelope&) const = default;
};

// Returns a description of the first violated invariant, or nullopt.
std::optional<std::string> CheckEnvelope(const Envelope& env);
// Throws Error(kInvalidEnvelope) when CheckEnvelope reports a violation.
void ValidateEnvelope(const Envelope& env);

}  // namespace fedbridge::wire

template <>
struct std::hash<fedbridge::wire::MsgId> {
  size_t operator()(const fedbridge::wire::MsgId& id) const noexcept {
    return std::hash<uint64_t>{}(id.hi() * 0x9e3779b97f4a7c15ULL ^ id.lo());
  }
};

template <>
struct std::hash<fedbridge::wire::SiteAddress> {
  size_t operator()(const fedbridge::wire::SiteAddress& a) const noexcept {
    return std::hash<std::string>{}(a.site) * 31 ^
           std::hash<std::string>{}(a.worker);
  }
};

#endif  // FEDBRIDGE_WIRE_ENVELOPE_H_
