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

#include "fedbridge/tracking/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedbridge/error.h"

namespace fedbridge::tracking {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json ToJson(const MetricRecord& r) {
  ordered_json j;
  j["job_id"] = r.job_id;
  j["site"] = r.site;
  j["tag"] = r.tag;
  j["value"] = r.value;
  j["step"] = r.step;
  j["t_ms"] = r.t_ms;
  return j;
}

MetricRecord FromJson(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != 6) {
    throw Error(ErrorCode::kMalformed, "metric record must have 6 fields");
  }
  try {
    MetricRecord r;
    r.job_id = j.at("job_id").get<std::string>();
    r.site = j.at("site").get<std::string>();
    r.tag = j.at("tag").get<std::string>();
    if (!j.at("value").is_number()) throw Error(ErrorCode::kMalformed, "value");
    r.value = j.at("value").get<double>();
    r.step = j.at("step").get<int64_t>();
    r.t_ms = j.at("t_ms").get<int64_t>();
    if (!std::isfinite(r.value) || r.step < 0) {
      throw Error(ErrorCode::kMalformed, "metric value/step out of range");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, e.what());
  }
}

std::string FormatDouble(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

void JournalWriter::AddScalar(const std::string& tag, double value, int64_t step) {
  Append(tag, value, step);
}

const MetricRecord& JournalWriter::Append(const std::string& tag, double value,
                                          int64_t step) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kNonFinite, "scalar '" + tag + "' is not finite");
  }
  if (step < 0) throw Error(ErrorCode::kStepOrder, "negative step for '" + tag + "'");
  auto [it, fresh] = last_step_.try_emplace(tag, step);
  if (!fresh) {
    if (step <= it->second) {
      throw Error(ErrorCode::kStepOrder, "step " + std::to_string(step) + " for '" + tag +
                                             "' is not after " + std::to_string(it->second));
    }
    it->second = step;
  }
  records_.push_back({job_id_, site_, tag, value, step, now_});
  return records_.back();
}

std::string RecordToJson(const MetricRecord& record) { return ToJson(record).dump(); }

MetricRecord RecordFromJson(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kMalformed, "metric line is not JSON");
  return FromJson(j);
}

std::string EncodeBatch(const std::vector<MetricRecord>& records) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : records) arr.push_back(ToJson(r));
  ordered_json j;
  j["records"] = std::move(arr);
  return j.dump();
}

std::vector<MetricRecord> DecodeBatch(std::string_view payload) {
  nlohmann::json j = nlohmann::json::parse(payload, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("records") ||
      !j["records"].is_array()) {
    throw Error(ErrorCode::kMalformed, "metric batch");
  }
  std::vector<MetricRecord> out;
  for (const auto& r : j["records"]) out.push_back(FromJson(r));
  return out;
}

MetricWriter::MetricWriter(std::string job_id, wire::SiteAddress self,
                           wire::SiteAddress sink, wire::MsgIdGenerator* ids,
                           SendFn send, int64_t retry_ms)
    : JournalWriter(job_id, self.site),
      job_id_(std::move(job_id)),
      self_(std::move(self)),
      sink_(std::move(sink)),
      ids_(ids),
      send_(std::move(send)),
      retry_ms_(retry_ms) {}

void MetricWriter::AddScalar(const std::string& tag, double value, int64_t step) {
  buffer_.push_back(Append(tag, value, step));
  if (buffer_.size() >= kFlushThreshold) Flush();
}

void MetricWriter::Flush() {
  if (buffer_.empty()) return;
  wire::Envelope env;
  env.msg_id = ids_->Next();
  env.job_id = job_id_;
  env.src = self_;
  env.dst = sink_;
  env.kind = wire::MessageKind::kMetric;
  env.payload = EncodeBatch(buffer_);
  buffer_.clear();
  auto& pending = unacked_[env.msg_id];
  pending.env = std::move(env);
  pending.next_t = now_ + retry_ms_;
  ++batches_sent_;
  send_(pending.env);
}

bool MetricWriter::OnAck(const wire::Envelope& ack) {
  if (ack.kind != wire::MessageKind::kAck) return false;
  return unacked_.erase(ack.correlation_id) > 0;
}

void MetricWriter::Tick(int64_t now) {
  now_ = std::max(now_, now);
  set_now(now_);
  for (auto& [id, pending] : unacked_) {
    if (pending.next_t > now_) continue;
    ++pending.env.attempt;
    pending.next_t = now_ + retry_ms_;
    ++retransmits_;
    send_(pending.env);
  }
}

std::optional<int64_t> MetricWriter::NextWakeup() const {
  std::optional<int64_t> next;
  for (const auto& [id, pending] : unacked_) {
    if (!next || pending.next_t < *next) next = pending.next_t;
  }
  return next;
}

MetricSink::MetricSink(std::string job_id, std::filesystem::path path)
    : job_id_(std::move(job_id)), path_(std::move(path)) {}

size_t MetricSink::Append(const std::vector<MetricRecord>& records) {
  std::string lines;
  size_t added = 0;
  for (const auto& r : records) {
    if (r.job_id != job_id_ || !seen_.emplace(r.site, r.tag, r.step).second) {
      ++duplicates_;
      continue;
    }
    records_.push_back(r);
    lines += RecordToJson(r);
    lines += '\n';
    ++added;
  }
  if (added > 0 && !path_.empty()) {
    std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << lines;
    if (!out) throw Error(ErrorCode::kIo, "cannot append to " + path_.string());
  }
  return added;
}

wire::Envelope MakeMetricAck(const wire::Envelope& batch, wire::MsgIdGenerator* ids) {
  wire::Envelope ack;
  ack.msg_id = ids->Next();
  ack.correlation_id = batch.msg_id;
  ack.job_id = batch.job_id;
  ack.src = batch.dst;
  ack.dst = batch.src;
  ack.kind = wire::MessageKind::kAck;
  return ack;
}

std::vector<MetricRecord> ReadMetricsLog(const std::filesystem::path& path) {
  std::vector<MetricRecord> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(RecordFromJson(line));
  }
  return out;
}

std::string MetricsCsv(const std::vector<MetricRecord>& records, const std::string& tag) {
  std::vector<const MetricRecord*> rows;
  for (const auto& r : records) {
    if (r.tag == tag) rows.push_back(&r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    return std::tie(a->step, a->site) < std::tie(b->step, b->site);
  });
  std::string out = "step,site,value\n";
  for (const auto* r : rows) {
    out += std::to_string(r->step) + "," + r->site + "," + FormatDouble(r->value) + "\n";
  }
  return out;
}

void ExportCsv(const std::filesystem::path& metrics_log, const std::string& tag,
               const std::filesystem::path& out) {
  std::string csv = MetricsCsv(ReadMetricsLog(metrics_log), tag);
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  file << csv;
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + out.string());
}

}  // namespace fedbridge::tracking
