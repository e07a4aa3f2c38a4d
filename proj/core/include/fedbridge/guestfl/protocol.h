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

#ifndef FEDBRIDGE_GUESTFL_PROTOCOL_H_
#define FEDBRIDGE_GUESTFL_PROTOCOL_H_

#include <string>
#include <string_view>
#include <vector>

#include "fedbridge/guestfl/model.h"

namespace fedbridge::guestfl {

// Guest protocol: every node request gets exactly one link response. Both
// directions are compact JSON objects carried as length-prefixed frames.
//
//   node -> link   {"type":"pull","node":S}
//                  {"type":"push","node":S,"round":R,"op":"fit","weights":[..],
//                   "num_examples":N,"metrics":{..}}
//                  {"type":"push","node":S,"round":R,"op":"evaluate","loss":L,
//                   "num_examples":N,"metrics":{"accuracy":A}}
//                  {"type":"fault","node":S,"reason":"..."}
//   link -> node   {"type":"task","round":R,"op":"fit"|"evaluate","weights":[..]}
//                  {"type":"wait"} {"type":"ack"} {"type":"done"}
//                  {"type":"error","reason":"..."}

enum class Op { kFit, kEvaluate };

struct NodeMessage {
  enum class Type { kPull, kPush, kFault } type = Type::kPull;
  std::string node;
  int round = 0;
  Op op = Op::kFit;
  FitResult fit;
  EvalResult eval;
  std::string reason;
};

struct LinkMessage {
  enum class Type { kTask, kWait, kAck, kDone, kError } type = Type::kWait;
  int round = 0;
  Op op = Op::kFit;
  std::vector<double> weights;
  std::string reason;
};

std::string EncodeNodeMessage(const NodeMessage& m);
// Throws Error(kMalformed).
NodeMessage DecodeNodeMessage(std::string_view body);
std::string EncodeLinkMessage(const LinkMessage& m);
LinkMessage DecodeLinkMessage(std::string_view body);

struct RoundRecord {
  int round = 0;
  double loss = 0;
  double accuracy = 0;

  bool operator==(const RoundRecord&) const = default;
};
using History = std::vector<RoundRecord>;

// Pretty-printed JSON list of {round, loss, accuracy} with a trailing
// newline; doubles use the shortest round-trip form.
std::string HistoryToJson(const History& history);
History HistoryFromJson(std::string_view text);

}  // namespace fedbridge::guestfl

#endif  // FEDBRIDGE_GUESTFL_PROTOCOL_H_
