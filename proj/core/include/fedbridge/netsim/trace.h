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

#ifndef FEDBRIDGE_NETSIM_TRACE_H_
#define FEDBRIDGE_NETSIM_TRACE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "fedbridge/netsim/fabric.h"

namespace fedbridge::netsim {

// One delivered frame, with the envelope header fields needed for audits.
struct TraceEntry {
  int64_t t_ms = 0;
  std::string src;  // link endpoint that sent the frame
  std::string dst;  // link endpoint that received it
  std::string msg_id;
  std::string kind;
  std::string job_id;
  wire::SiteAddress env_dst;
  bool decoded = false;

  bool operator==(const TraceEntry&) const = default;
};

class TraceLog {
 public:
  void Record(const Delivery& delivery);
  const std::vector<TraceEntry>& entries() const { return entries_; }
  void Clear() { entries_.clear(); }

  // {t_ms, src, dst, msg_id, kind} per line.
  std::string ToJsonl() const;
  void WriteJsonl(const std::filesystem::path& path) const;

 private:
  std::vector<TraceEntry> entries_;
};

}  // namespace fedbridge::netsim

#endif  // FEDBRIDGE_NETSIM_TRACE_H_
