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

#ifndef FEDBRIDGE_RUNTIME_SCHEDULER_H_
#define FEDBRIDGE_RUNTIME_SCHEDULER_H_

#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fedbridge::runtime {

// What the scheduler needs to know about a queued job.
struct PendingJob {
  std::string job_id;
  int min_sites = 1;
  std::vector<std::string> candidates;  // sorted, already filtered
  std::map<std::string, int> need;      // slots per candidate site
};

struct Admission {
  std::string job_id;
  std::vector<std::string> participants;  // sorted
};

// Tracks free slots per site. Used never exceeds capacity.
class SlotTable {
 public:
  void SetCapacity(const std::string& site, int slots);
  int capacity(const std::string& site) const;
  int used(const std::string& site) const;
  int free(const std::string& site) const { return capacity(site) - used(site); }
  // Throws std::logic_error on over-allocation or over-release.
  void Reserve(const std::string& site, int n);
  void Release(const std::string& site, int n);
  const std::map<std::string, int>& capacities() const { return capacity_; }

 private:
  std::map<std::string, int> capacity_;
  std::map<std::string, int> used_;
};

// Strict FIFO: admits from the head of `queue` while the head job finds at
// least min_sites online candidates with enough free slots; every such site
// joins. The first job that cannot be admitted blocks those behind it.
// Admitted jobs are popped and their slots reserved.
std::vector<Admission> AdmitFifo(std::deque<PendingJob>& queue, SlotTable& slots,
                                 const std::set<std::string>& online);

}  // namespace fedbridge::runtime

#endif  // FEDBRIDGE_RUNTIME_SCHEDULER_H_
