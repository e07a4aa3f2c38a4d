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

#ifndef FEDBRIDGE_BRIDGE_GUEST_MESSAGE_H_
#define FEDBRIDGE_BRIDGE_GUEST_MESSAGE_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace fedbridge::bridge {

enum class Direction : uint8_t { kToLink = 1, kToNode = 2 };

std::string_view DirectionName(Direction d);

struct GuestMessage {
  uint64_t stream_id = 0;
  uint64_t seq = 0;
  Direction direction = Direction::kToLink;
  std::string body;

  bool operator==(const GuestMessage&) const = default;
};

// u64be stream_id, u64be seq, u8 direction, then the body verbatim.
std::string EncodeGuestMessage(const GuestMessage& m);
// Throws Error(kMalformed).
GuestMessage DecodeGuestMessage(std::string_view bytes);

}  // namespace fedbridge::bridge

#endif  // FEDBRIDGE_BRIDGE_GUEST_MESSAGE_H_
