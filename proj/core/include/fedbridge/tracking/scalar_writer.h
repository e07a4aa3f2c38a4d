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

#ifndef FEDBRIDGE_TRACKING_SCALAR_WRITER_H_
#define FEDBRIDGE_TRACKING_SCALAR_WRITER_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fedbridge::tracking {

// What a client app sees: add_scalar(tag, value, step).
class ScalarWriter {
 public:
  virtual ~ScalarWriter() = default;
  // Throws Error(kNonFinite) or Error(kStepOrder).
  virtual void AddScalar(const std::string& tag, double value, int64_t step) = 0;
  // Hint that a round ended; buffered records should go out now.
  virtual void Flush() {}
};

struct MetricRecord {
  std::string job_id;
  std::string site;
  std::string tag;
  double value = 0;
  int64_t step = 0;
  int64_t t_ms = 0;

  bool operator==(const MetricRecord&) const = default;
};

// Keeps records in memory and enforces the writer contract; used by direct
// runs and as the journal inside MetricWriter.
class JournalWriter : public ScalarWriter {
 public:
  JournalWriter(std::string job_id, std::string site)
      : job_id_(std::move(job_id)), site_(std::move(site)) {}

  void AddScalar(const std::string& tag, double value, int64_t step) override;
  void set_now(int64_t now) { now_ = now; }
  const std::vector<MetricRecord>& records() const { return records_; }

 protected:
  // Validates and appends; returns the stored record.
  const MetricRecord& Append(const std::string& tag, double value, int64_t step);

 private:
  std::string job_id_;
  std::string site_;
  int64_t now_ = 0;
  std::map<std::string, int64_t> last_step_;
  std::vector<MetricRecord> records_;
};

}  // namespace fedbridge::tracking

#endif  // FEDBRIDGE_TRACKING_SCALAR_WRITER_H_
