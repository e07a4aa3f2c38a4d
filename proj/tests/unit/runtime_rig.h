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

#ifndef FEDBRIDGE_TESTS_RUNTIME_RIG_H_
#define FEDBRIDGE_TESTS_RUNTIME_RIG_H_

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fedbridge/runtime/job.h"
#include "fedbridge/runtime/scenario.h"
#include "fl_fixtures.h"

namespace fedbridge::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fedbridge-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> ReadLines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline guestfl::AppConfig ThreeSiteApp() {
  guestfl::AppConfig app = SmallApp();
  app.sites["site3"] = {303, 56, 24};
  app.min_clients = 3;
  return app;
}

inline runtime::ScenarioConfig MakeScenario(const std::filesystem::path& runs,
                                            std::vector<std::string> sites = {"site1", "site2"},
                                            int slots = 1, netsim::LinkPolicy link = {}) {
  runtime::ScenarioConfig s;
  s.seed = 11;
  for (auto& name : sites) s.sites.push_back({name, slots});
  s.default_link = link;
  s.apps["linreg"] = SmallApp();
  s.runs_dir = runs;
  s.time_limit_ms = 600'000;
  return s;
}

inline runtime::JobSpec MakeJob(const std::string& id, int min_sites = 2) {
  runtime::JobSpec spec;
  spec.job_id = id;
  spec.app_ref = "linreg";
  spec.min_sites = min_sites;
  spec.reliable.retry_ms = 100;
  spec.reliable.query_ms = 200;
  spec.reliable.send_deadline_ms = 10'000;
  spec.reliable.result_deadline_ms = 60'000;
  spec.seed = 5;
  return spec;
}

}  // namespace fedbridge::testing

#endif  // FEDBRIDGE_TESTS_RUNTIME_RIG_H_
