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

#ifndef FEDBRIDGE_GUESTFL_DIRECT_H_
#define FEDBRIDGE_GUESTFL_DIRECT_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fedbridge/guestfl/app_config.h"
#include "fedbridge/guestfl/node.h"
#include "fedbridge/guestfl/protocol.h"
#include "fedbridge/tracking/scalar_writer.h"

namespace fedbridge::guestfl {

struct DirectOptions {
  // Defaults to the sites listed in app.json.
  std::vector<std::string> sites;
  // Optional per-site writer handed to the client app.
  std::function<tracking::ScalarWriter*(const std::string& site)> writer_for;
  int64_t time_limit_ms = 24LL * 3600 * 1000;
};

struct DirectResult {
  bool ok = false;
  std::string failure;
  History history;
  std::map<std::string, std::vector<TranscriptEntry>> transcripts;
  int64_t end_ms = 0;
};

// Guest link and nodes connected by in-process pipes, no runtime in between.
DirectResult RunDirect(const AppConfig& app, const DirectOptions& options = {});

}  // namespace fedbridge::guestfl

#endif  // FEDBRIDGE_GUESTFL_DIRECT_H_
