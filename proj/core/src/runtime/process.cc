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

#include "fedbridge/runtime/process.h"

namespace fedbridge::runtime {

bool Process::Route(const wire::Envelope& env) {
  if (env.dst.site == site_) {
    local_.push_back(env);
    ++stats_.local;
    return true;
  }
  if (env.src.site == site_ && !env.src.is_control() && !env.dst.is_control() &&
      links_->HasLink(env.src, env.dst)) {
    ++stats_.direct;
    bool ok = links_->Send(env.src, env.dst, env);
    ++(ok ? stats_.sent : stats_.refused);
    return ok;
  }
  return ForwardOnControl(env);
}

bool Process::ForwardOnControl(const wire::Envelope& env) {
  auto [from, to] = ControlHop(env.dst);
  bool ok = links_->Send(from, to, env);
  ++(ok ? stats_.sent : stats_.refused);
  return ok;
}

void Process::DrainLocal(int64_t now) {
  // Handlers may route more local traffic; bound the work per call.
  for (size_t n = local_.size(); n > 0 && !local_.empty(); --n) {
    wire::Envelope env = std::move(local_.front());
    local_.pop_front();
    OnEnvelope(env, now);
  }
}

}  // namespace fedbridge::runtime
