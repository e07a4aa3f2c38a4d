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

#include "fedbridge/wire/codec.h"

#include <array>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "fedbridge/error.h"
#include "fedbridge/wire/base64.h"

namespace fedbridge::wire {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 10> kKeys = {
    "msg_id",   "correlation_id", "job_id", "src_site",   "src_worker",
    "dst_site", "dst_worker",     "kind",   "attempt",    "payload_b64"};

void PutU32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

uint32_t GetU32(std::string_view in) {
  return (uint32_t{static_cast<uint8_t>(in[0])} << 24) |
         (uint32_t{static_cast<uint8_t>(in[1])} << 16) |
         (uint32_t{static_cast<uint8_t>(in[2])} << 8) |
         uint32_t{static_cast<uint8_t>(in[3])};
}

[[noreturn]] void Malformed(const std::string& why) {
  throw Error(ErrorCode::kMalformed, why);
}

const std::string& StringField(const json& obj, std::string_view key) {
  const auto& v = obj.at(std::string(key));
  if (!v.is_string()) Malformed(std::string(key) + " must be a string");
  return v.get_ref<const std::string&>();
}

MsgId IdField(const json& obj, std::string_view key) {
  auto id = MsgId::FromHex(StringField(obj, key));
  if (!id) Malformed(std::string(key) + " must be 32 lowercase hex digits");
  return *id;
}

}  // namespace

std::string FrameBody(std::string_view body) {
  if (body.size() > kMaxFrameBytes - kFramePrefixBytes) {
    throw Error(ErrorCode::kFrameTooLarge,
                "frame body of " + std::to_string(body.size()) + " bytes");
  }
  std::string out;
  out.reserve(body.size() + kFramePrefixBytes);
  PutU32(out, static_cast<uint32_t>(body.size()));
  out.append(body);
  return out;
}

std::string EncodeEnvelope(const Envelope& env) {
  ValidateEnvelope(env);
  // Base64 expands by 4/3; reject early instead of building a huge string.
  if (env.payload.size() / 3 * 4 > kMaxFrameBytes) {
    throw Error(ErrorCode::kFrameTooLarge,
                "payload of " + std::to_string(env.payload.size()) + " bytes");
  }
  ordered_json obj;
  obj["msg_id"] = env.msg_id.ToHex();
  obj["correlation_id"] = env.correlation_id.ToHex();
  obj["job_id"] = env.job_id;
  obj["src_site"] = env.src.site;
  obj["src_worker"] = env.src.worker;
  obj["dst_site"] = env.dst.site;
  obj["dst_worker"] = env.dst.worker;
  obj["kind"] = std::string(KindName(env.kind));
  obj["attempt"] = env.attempt;
  obj["payload_b64"] = Base64Encode(env.payload);
  std::string body;
  try {
    body = obj.dump();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidEnvelope,
                std::string("string field is not valid UTF-8: ") + e.what());
  }
  return FrameBody(body);
}

Envelope DecodeEnvelopeBody(std::string_view body) {
  std::set<std::string> seen;
  bool duplicate = false;
  auto on_event = [&](int depth, json::parse_event_t event, json& parsed) {
    if (depth == 1 && event == json::parse_event_t::key) {
      if (!seen.insert(parsed.get<std::string>()).second) duplicate = true;
    }
    return true;
  };
  json obj;
  try {
    obj = json::parse(body.begin(), body.end(), on_event);
  } catch (const json::exception& e) {
    Malformed(std::string("invalid JSON: ") + e.what());
  }
  if (duplicate) Malformed("duplicate key");
  if (!obj.is_object()) Malformed("frame body must be a JSON object");
  if (obj.size() != kKeys.size()) Malformed("wrong number of keys");
  for (auto key : kKeys) {
    if (!obj.contains(std::string(key))) {
      Malformed("missing key " + std::string(key));
    }
  }

  Envelope env;
  env.msg_id = IdField(obj, "msg_id");
  env.correlation_id = IdField(obj, "correlation_id");
  env.job_id = StringField(obj, "job_id");
  env.src = {StringField(obj, "src_site"), StringField(obj, "src_worker")};
  env.dst = {StringField(obj, "dst_site"), StringField(obj, "dst_worker")};
  auto kind = ParseKind(StringField(obj, "kind"));
  if (!kind) Malformed("unknown kind " + StringField(obj, "kind"));
  env.kind = *kind;

  const auto& attempt = obj.at("attempt");
  if (!attempt.is_number_unsigned() ||
      attempt.get<uint64_t>() > std::numeric_limits<uint32_t>::max()) {
    Malformed("attempt must be a non-negative 32-bit integer");
  }
  env.attempt = attempt.get<uint32_t>();

  auto payload = Base64Decode(StringField(obj, "payload_b64"));
  if (!payload) Malformed("payload_b64 is not canonical padded base64");
  env.payload = std::move(*payload);

  if (auto problem = CheckEnvelope(env)) Malformed(*problem);
  return env;
}

Envelope DecodeEnvelope(std::string_view frame) {
  if (frame.size() < kFramePrefixBytes) {
    throw Error(ErrorCode::kTruncated, "frame shorter than its length prefix");
  }
  uint64_t length = GetU32(frame);
  if (length + kFramePrefixBytes > kMaxFrameBytes) {
    throw Error(ErrorCode::kFrameTooLarge,
                "declared length " + std::to_string(length));
  }
  if (frame.size() < length + kFramePrefixBytes) {
    throw Error(ErrorCode::kTruncated,
                "have " + std::to_string(frame.size() - kFramePrefixBytes) +
                    " of " + std::to_string(length) + " body bytes");
  }
  if (frame.size() > length + kFramePrefixBytes) {
    Malformed("trailing bytes after frame");
  }
  return DecodeEnvelopeBody(frame.substr(kFramePrefixBytes));
}

std::optional<std::string> FrameReader::NextBody() {
  if (buffered() < kFramePrefixBytes) return std::nullopt;
  std::string_view view(buffer_);
  view.remove_prefix(offset_);
  uint64_t length = GetU32(view);
  if (length + kFramePrefixBytes > max_frame_bytes_) {
    throw Error(ErrorCode::kFrameTooLarge,
                "declared length " + std::to_string(length));
  }
  if (view.size() < length + kFramePrefixBytes) return std::nullopt;
  std::string body(view.substr(kFramePrefixBytes, length));
  offset_ += kFramePrefixBytes + length;
  if (offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  } else if (offset_ > 4096 && offset_ * 2 > buffer_.size()) {
    buffer_.erase(0, offset_);
    offset_ = 0;
  }
  return body;
}

}  // namespace fedbridge::wire
