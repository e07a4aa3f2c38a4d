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

#include "fedbridge/runtime/scheduler.h"

#include <stdexcept>

namespace fedbridge::runtime {

void SlotTable::SetCapacity(const std::string& site, int slots) {
  capacity_[site] = slots;
  used_.try_emplace(site, 0);
}

int SlotTable::capacity(const std::string& site) const {
  auto it = capacity_.find(site);
  return it == capacity_.end() ? 0 : it->second;
}

int SlotTable::used(const std::string& site) const {
  auto it = used_.find(site);
  return it == used_.end() ? 0 : it->second;
}

void SlotTable::Reserve(const std::string& site, int n) {
  if (n < 0 || used(site) + n > capacity(site)) {
    throw std::logic_error("slot over-allocation on " + site);
  }
  used_[site] += n;
}

void SlotTable::Release(const std::string& site, int n) {
  if (n < 0 || used(site) < n) throw std::logic_error("slot over-release on " + site);
  used_[site] -= n;
}

std::vector<Admission> AdmitFifo(std::deque<PendingJob>& queue, SlotTable& slots,
                                 const std::set<std::string>& online) {
  std::vector<Admission> admitted;
  while (!queue.empty()) {
    const PendingJob& head = queue.front();
    std::vector<std::string> eligible;
    for (const auto& site : head.candidates) {
      auto need = head.need.find(site);
      int n = need == head.need.end() ? 1 : need->second;
      if (online.count(site) && slots.free(site) >= n) eligible.push_back(site);
    }
    if (static_cast<int>(eligible.size()) < head.min_sites) break;
    for (const auto& site : eligible) {
      auto need = head.need.find(site);
      slots.Reserve(site, need == head.need.end() ? 1 : need->second);
    }
    admitted.push_back({head.job_id, std::move(eligible)});
    queue.pop_front();
  }
  return admitted;
}

}  // namespace fedbridge::runtime
