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

#ifndef FEDBRIDGE_TRACKING_METRICS_H_
#define FEDBRIDGE_TRACKING_METRICS_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fedbridge/tracking/scalar_writer.h"
#include "fedbridge/wire/envelope.h"

namespace fedbridge::tracking {

inline constexpr size_t kFlushThreshold = 100;

std::string RecordToJson(const MetricRecord& record);
// Throws Error(kMalformed).
MetricRecord RecordFromJson(std::string_view line);

std::string EncodeBatch(const std::vector<MetricRecord>& records);
std::vector<MetricRecord> DecodeBatch(std::string_view payload);

// Client-side streaming writer. Records are batched into METRIC envelopes;
// each batch is resent every retry_ms until the sink ACKs it.
class MetricWriter : public JournalWriter {
 public:
  using SendFn = std::function<bool(const wire::Envelope&)>;

  MetricWriter(std::string job_id, wire::SiteAddress self, wire::SiteAddress sink,
               wire::MsgIdGenerator* ids, SendFn send, int64_t retry_ms);

  void AddScalar(const std::string& tag, double value, int64_t step) override;
  void Flush() override;

  // Consumes an ACK for one of our batches; false for anything else.
  bool OnAck(const wire::Envelope& ack);
  void Tick(int64_t now);
  std::optional<int64_t> NextWakeup() const;
  // Nothing buffered and nothing awaiting an ACK.
  bool drained() const { return buffer_.empty() && unacked_.empty(); }
  uint64_t batches_sent() const { return batches_sent_; }
  uint64_t retransmits() const { return retransmits_; }

 private:
  struct Pending {
    wire::Envelope env;
    int64_t next_t = 0;
  };

  std::string job_id_;
  wire::SiteAddress self_;
  wire::SiteAddress sink_;
  wire::MsgIdGenerator* ids_;
  SendFn send_;
  int64_t retry_ms_;
  int64_t now_ = 0;
  std::vector<MetricRecord> buffer_;
  std::map<wire::MsgId, Pending> unacked_;
  uint64_t batches_sent_ = 0;
  uint64_t retransmits_ = 0;
};

// Server-side append-only log, one per job, deduplicating on
// (site, tag, step).
class MetricSink {
 public:
  // Records are appended to `path` as JSON lines when nonempty.
  MetricSink(std::string job_id, std::filesystem::path path);

  // Returns the number of new records appended.
  size_t Append(const std::vector<MetricRecord>& records);
  const std::vector<MetricRecord>& records() const { return records_; }
  uint64_t duplicates() const { return duplicates_; }
  const std::string& job_id() const { return job_id_; }

 private:
  std::string job_id_;
  std::filesystem::path path_;
  std::set<std::tuple<std::string, std::string, int64_t>> seen_;
  std::vector<MetricRecord> records_;
  uint64_t duplicates_ = 0;
};

// Builds the ACK for a METRIC batch.
wire::Envelope MakeMetricAck(const wire::Envelope& batch, wire::MsgIdGenerator* ids);

// Reads a metrics.jsonl file; a missing file yields no records.
std::vector<MetricRecord> ReadMetricsLog(const std::filesystem::path& path);

// "step,site,value" rows for `tag`, sorted by (step, site).
std::string MetricsCsv(const std::vector<MetricRecord>& records, const std::string& tag);
void ExportCsv(const std::filesystem::path& metrics_log, const std::string& tag,
               const std::filesystem::path& out);

}  // namespace fedbridge::tracking

#endif  // FEDBRIDGE_TRACKING_METRICS_H_
