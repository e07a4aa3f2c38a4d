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

#include "fedbridge/bridge/guest_message.h"

#include "fedbridge/error.h"

namespace fedbridge::bridge {
namespace {

constexpr size_t kHeaderBytes = 17;

void PutU64(std::string& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>(v >> shift));
}

uint64_t GetU64(std::string_view in) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<uint8_t>(in[i]);
  return v;
}

}  // namespace

std::string_view DirectionName(Direction d) {
  return d == Direction::kToLink ? "TO_LINK" : "TO_NODE";
}

std::string EncodeGuestMessage(const GuestMessage& m) {
  std::string out;
  out.reserve(kHeaderBytes + m.body.size());
  PutU64(out, m.stream_id);
  PutU64(out, m.seq);
  out.push_back(static_cast<char>(m.direction));
  out += m.body;
  return out;
}

GuestMessage DecodeGuestMessage(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw Error(ErrorCode::kMalformed, "guest message shorter than its header");
  }
  GuestMessage m;
  m.stream_id = GetU64(bytes.substr(0, 8));
  m.seq = GetU64(bytes.substr(8, 8));
  auto dir = static_cast<uint8_t>(bytes[16]);
  if (dir != 1 && dir != 2) throw Error(ErrorCode::kMalformed, "bad guest message direction");
  if (m.stream_id == 0 || m.seq == 0) {
    throw Error(ErrorCode::kMalformed, "stream_id and seq start at 1");
  }
  m.direction = static_cast<Direction>(dir);
  m.body.assign(bytes.substr(kHeaderBytes));
  return m;
}

}  // namespace fedbridge::bridge
