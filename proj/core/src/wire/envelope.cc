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

#include "fedbridge/wire/envelope.h"

#include <array>

#include "fedbridge/error.h"

namespace fedbridge::wire {
namespace {

constexpr std::array<std::string_view, 13> kKindNames = {
    "REQUEST", "RESPONSE", "QUERY",     "QUERY_RESPONSE", "ACK",
    "SUBMIT",  "DEPLOY",   "STATUS",    "ABORT",          "HEARTBEAT",
    "METRIC",  "GUEST_FWD", "GUEST_RET"};

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int HexValue(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

std::optional<MsgId> MsgId::FromHex(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  uint64_t parts[2] = {0, 0};
  for (size_t i = 0; i < 32; ++i) {
    int v = HexValue(hex[i]);
    if (v < 0) return std::nullopt;
    parts[i / 16] = (parts[i / 16] << 4) | static_cast<uint64_t>(v);
  }
  return MsgId(parts[0], parts[1]);
}

std::string MsgId::ToHex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    out[15 - i] = kDigits[(hi_ >> (4 * i)) & 0xf];
    out[31 - i] = kDigits[(lo_ >> (4 * i)) & 0xf];
  }
  return out;
}

MsgIdGenerator::MsgIdGenerator(uint64_t id_namespace)
    : hi_(SplitMix64(id_namespace)) {
  if (hi_ == 0) hi_ = 1;  // keeps every issued id distinct from Zero()
}

MsgId MsgIdGenerator::Next() { return MsgId(hi_, ++counter_); }

std::string SiteAddress::ToString() const {
  return worker.empty() ? site : site + "/" + worker;
}

bool IsValidSiteName(std::string_view name) {
  if (name.empty() || name.size() > kMaxSiteBytes) return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
              c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string_view KindName(MessageKind kind) {
  return kKindNames.at(static_cast<size_t>(kind));
}

std::optional<MessageKind> ParseKind(std::string_view name) {
  for (size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<MessageKind>(i);
  }
  return std::nullopt;
}

bool IsControlKind(MessageKind kind) {
  switch (kind) {
    case MessageKind::kSubmit:
    case MessageKind::kStatus:
    case MessageKind::kAbort:
    case MessageKind::kHeartbeat:
      return true;
    default:
      return false;
  }
}

bool IsRequestKind(MessageKind kind) {
  switch (kind) {
    case MessageKind::kRequest:
    case MessageKind::kGuestFwd:
    case MessageKind::kSubmit:
    case MessageKind::kDeploy:
    case MessageKind::kStatus:
    case MessageKind::kAbort:
      return true;
    default:
      return false;
  }
}

bool IsResultKind(MessageKind kind) {
  return kind == MessageKind::kResponse || kind == MessageKind::kGuestRet;
}

std::optional<std::string> CheckEnvelope(const Envelope& env) {
  if (env.msg_id.IsZero()) return "msg_id must be nonzero";
  if (!IsValidSiteName(env.src.site)) return "invalid src site '" + env.src.site + "'";
  if (!IsValidSiteName(env.dst.site)) return "invalid dst site '" + env.dst.site + "'";
  if (env.job_id.size() > kMaxJobIdBytes) return "job_id longer than 64 bytes";
  if (env.job_id.empty() && !IsControlKind(env.kind)) {
    return std::string("job_id required for kind ") + std::string(KindName(env.kind));
  }
  switch (env.kind) {
    case MessageKind::kQuery:
    case MessageKind::kQueryResponse:
    case MessageKind::kResponse:
    case MessageKind::kGuestRet:
    case MessageKind::kAck:
      if (env.correlation_id.IsZero()) {
        return std::string(KindName(env.kind)) + " requires a correlation_id";
      }
      break;
    default:
      break;
  }
  return std::nullopt;
}

void ValidateEnvelope(const Envelope& env) {
  if (auto problem = CheckEnvelope(env)) {
    throw Error(ErrorCode::kInvalidEnvelope, *problem);
  }
}

}  // namespace fedbridge::wire
