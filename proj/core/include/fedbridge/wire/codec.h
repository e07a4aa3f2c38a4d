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

#ifndef FEDBRIDGE_WIRE_CODEC_H_
#define FEDBRIDGE_WIRE_CODEC_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "fedbridge/wire/envelope.h"

namespace fedbridge::wire {

// Upper bound on a whole frame, length prefix included.
inline constexpr size_t kMaxFrameBytes = size_t{64} << 20;
inline constexpr size_t kFramePrefixBytes = 4;

// Prepends the 4-byte big-endian length. Throws Error(kFrameTooLarge).
std::string FrameBody(std::string_view body);

// Frame layout: u32be length, then a compact JSON object with the keys
// msg_id, correlation_id, job_id, src_site, src_worker, dst_site, dst_worker,
// kind, attempt, payload_b64 in exactly that order.
std::string EncodeEnvelope(const Envelope& env);

// Strict inverse of EncodeEnvelope. `frame` must hold exactly one frame.
// Throws Error with kTruncated, kMalformed or kFrameTooLarge.
Envelope DecodeEnvelope(std::string_view frame);

// Decodes only the JSON body (no length prefix).
Envelope DecodeEnvelopeBody(std::string_view body);

// Incremental splitter for a byte stream of length-prefixed frames.
class FrameReader {
 public:
  explicit FrameReader(size_t max_frame_bytes = kMaxFrameBytes)
      : max_frame_bytes_(max_frame_bytes) {}

  void Append(std::string_view bytes) { buffer_.append(bytes); }
  // Next complete frame body (prefix stripped), or nullopt if more bytes are
  // needed. Throws Error(kFrameTooLarge) when a prefix exceeds the cap.
  std::optional<std::string> NextBody();
  size_t buffered() const { return buffer_.size() - offset_; }

 private:
  size_t max_frame_bytes_;
  std::string buffer_;
  size_t offset_ = 0;
};

}  // namespace fedbridge::wire

#endif  // FEDBRIDGE_WIRE_CODEC_H_
