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

#include "fedbridge/guestfl/direct.h"

#include "fedbridge/error.h"
#include "fedbridge/guestfl/server_app.h"

namespace fedbridge::guestfl {

DirectResult RunDirect(const AppConfig& app, const DirectOptions& options) {
  std::vector<std::string> sites = options.sites;
  if (sites.empty()) {
    for (const auto& [name, s] : app.sites) sites.push_back(name);
  }
  if (sites.empty()) throw Error(ErrorCode::kInvalidConfig, "direct run needs at least one site");

  net::InProcListener listener;
  net::InProcDialer dialer(&listener);
  GuestLink link(app, sites.size());
  GuestLinkServer server(&link, &listener);
  std::vector<std::unique_ptr<GuestNode>> nodes;
  std::vector<net::Actor*> actors{&server};
  for (const auto& site : sites) {
    tracking::ScalarWriter* writer = options.writer_for ? options.writer_for(site) : nullptr;
    nodes.push_back(std::make_unique<GuestNode>(
        site, ClientApp(app.MakeSiteData(site), app.epochs, app.lr, writer), &dialer,
        app.poll_ms));
    actors.push_back(nodes.back().get());
  }

  DirectResult result;
  result.end_ms = net::RunActors(actors, [&] { return link.finished(); }, 0,
                                 options.time_limit_ms);
  result.history = link.history();
  result.ok = link.state() == GuestLink::State::kDone;
  if (link.state() == GuestLink::State::kFailed) {
    result.failure = link.failure_reason();
  } else if (!result.ok) {
    result.failure = "stalled in state " + std::string(LinkStateName(link.state()));
  }
  for (const auto& node : nodes) result.transcripts[node->site()] = node->transcript();
  return result;
}

}  // namespace fedbridge::guestfl
