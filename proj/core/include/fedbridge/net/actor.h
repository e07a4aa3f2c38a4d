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

#ifndef FEDBRIDGE_NET_ACTOR_H_
#define FEDBRIDGE_NET_ACTOR_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

namespace fedbridge::net {

// Something driven by a clock. Tick() does all work due at `now`;
// NextWakeup() reports when it next has work (nullopt = idle until poked).
class Actor {
 public:
  virtual ~Actor() = default;
  virtual void Tick(int64_t now) = 0;
  virtual std::optional<int64_t> NextWakeup() const = 0;
};

// Drives actors on a virtual clock starting at `start` until `stop` holds,
// everything goes idle, or the clock would pass `limit`. Returns the final
// clock value.
int64_t RunActors(std::span<Actor* const> actors, const std::function<bool()>& stop,
                  int64_t start, int64_t limit);

}  // namespace fedbridge::net

#endif  // FEDBRIDGE_NET_ACTOR_H_
