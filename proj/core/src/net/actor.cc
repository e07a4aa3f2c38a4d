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

#include "fedbridge/net/actor.h"

#include <algorithm>

namespace fedbridge::net {

int64_t RunActors(std::span<Actor* const> actors, const std::function<bool()>& stop,
                  int64_t start, int64_t limit) {
  int64_t now = start;
  while (true) {
    for (Actor* a : actors) a->Tick(now);
    if (stop && stop()) return now;
    std::optional<int64_t> next;
    for (Actor* a : actors) {
      auto t = a->NextWakeup();
      if (t && (!next || *t < *next)) next = t;
    }
    if (!next || *next > limit) return now;
    now = std::max(now, *next);
  }
}

}  // namespace fedbridge::net
