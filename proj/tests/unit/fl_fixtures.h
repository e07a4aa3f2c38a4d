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

#ifndef FEDBRIDGE_TESTS_FL_FIXTURES_H_
#define FEDBRIDGE_TESTS_FL_FIXTURES_H_

#include <map>
#include <string>

#include "fedbridge/guestfl/app_config.h"
#include "fedbridge/guestfl/client_app.h"
#include "fedbridge/guestfl/protocol.h"
#include "fedbridge/guestfl/strategy.h"

namespace fedbridge::testing {

inline guestfl::AppConfig SmallApp(guestfl::StrategyKind strategy = guestfl::StrategyKind::kFedAvg) {
  guestfl::AppConfig app;
  app.dimension = 16;
  app.epochs = 2;
  app.lr = 0.05;
  app.task_seed = 7;
  app.noise = 0.1;
  app.init_seed = 3;
  app.train_examples = 48;
  app.test_examples = 32;
  app.sites["site1"] = {101, 48, 32};
  app.sites["site2"] = {202, 80, 40};
  app.num_rounds = 3;
  app.strategy = strategy;
  app.min_clients = 2;
  app.poll_ms = 20;
  return app;
}

// The training loop with no transport at all: fit every site in name order,
// aggregate, evaluate, weight by example counts.
inline guestfl::History ScriptedHistory(const guestfl::AppConfig& app) {
  std::map<std::string, guestfl::ClientApp> clients;
  for (const auto& [site, cfg] : app.sites) {
    clients.emplace(site, guestfl::ClientApp(app.MakeSiteData(site), app.epochs, app.lr));
  }
  guestfl::Strategy strategy(app.strategy, app.fedadam);
  std::vector<double> global = app.InitialWeights();
  guestfl::History history;
  for (int r = 1; r <= app.num_rounds; ++r) {
    std::map<std::string, guestfl::FitResult> fits;
    for (auto& [site, c] : clients) fits[site] = c.Fit({global, r});
    global = strategy.Aggregate(global, fits);
    double loss = 0, acc = 0, total = 0;
    for (auto& [site, c] : clients) {
      guestfl::EvalResult e = c.Evaluate({global, r});
      double n = static_cast<double>(e.num_examples);
      loss += n * e.loss;
      acc += n * e.metrics.at("accuracy");
      total += n;
    }
    history.push_back({r, loss / total, acc / total});
  }
  return history;
}

}  // namespace fedbridge::testing

#endif  // FEDBRIDGE_TESTS_FL_FIXTURES_H_
