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

#include "fedbridge/netsim/trace.h"

#include <fstream>

#include <nlohmann/json.hpp>

#include "fedbridge/error.h"
#include "fedbridge/wire/codec.h"

namespace fedbridge::netsim {

void TraceLog::Record(const Delivery& delivery) {
  TraceEntry entry;
  entry.t_ms = delivery.due_ms;
  entry.src = delivery.from.ToString();
  entry.dst = delivery.to.ToString();
  try {
    wire::Envelope env = wire::DecodeEnvelope(delivery.frame);
    entry.msg_id = env.msg_id.ToHex();
    entry.kind = std::string(wire::KindName(env.kind));
    entry.job_id = env.job_id;
    entry.env_dst = env.dst;
    entry.decoded = true;
  } catch (const Error&) {
    entry.kind = "UNDECODABLE";
  }
  entries_.push_back(std::move(entry));
}

std::string TraceLog::ToJsonl() const {
  std::string out;
  for (const auto& e : entries_) {
    nlohmann::ordered_json line;
    line["t_ms"] = e.t_ms;
    line["src"] = e.src;
    line["dst"] = e.dst;
    line["msg_id"] = e.msg_id;
    line["kind"] = e.kind;
    out += line.dump();
    out += '\n';
  }
  return out;
}

void TraceLog::WriteJsonl(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << ToJsonl();
}

}  // namespace fedbridge::netsim
