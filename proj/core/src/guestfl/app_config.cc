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

#include "fedbridge/guestfl/app_config.h"

#include <cmath>
#include <fstream>
#include <set>

#include "fedbridge/error.h"
#include "fedbridge/wire/envelope.h"

namespace fedbridge::guestfl {
namespace {

using nlohmann::json;

[[noreturn]] void Bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, "app." + key + ": " + why);
}

void RejectUnknown(const json& j, const std::set<std::string>& known,
                   const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) Bad(where + key, "unknown key");
  }
}

int64_t GetInt(const json& j, const std::string& key, int64_t fallback, int64_t min,
               const std::string& where = "") {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (!v.is_number_integer()) Bad(where + key, "expected an integer");
  int64_t x = v.get<int64_t>();
  if (x < min) Bad(where + key, "must be >= " + std::to_string(min));
  return x;
}

uint64_t GetSeed(const json& j, const std::string& key, uint64_t fallback,
                 const std::string& where = "") {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<int64_t>() < 0)) {
    Bad(where + key, "expected a non-negative integer");
  }
  return v.get<uint64_t>();
}

double GetDouble(const json& j, const std::string& key, double fallback, double min) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (!v.is_number()) Bad(key, "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x) || x < min) Bad(key, "must be finite and >= " + std::to_string(min));
  return x;
}

}  // namespace

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t Fnv1a(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SiteDataConfig AppConfig::ForSite(const std::string& site) const {
  auto it = sites.find(site);
  if (it != sites.end()) return it->second;
  return {SplitMix64(task_seed ^ Fnv1a(site)), train_examples, test_examples};
}

SiteData AppConfig::MakeSiteData(const std::string& site) const {
  SiteDataConfig c = ForSite(site);
  return GenerateSiteData(TrueWeights(task_seed, static_cast<size_t>(dimension)), noise,
                          c.seed, static_cast<size_t>(c.train_examples),
                          static_cast<size_t>(c.test_examples));
}

std::vector<double> AppConfig::InitialWeights() const {
  NormalStream normal(SplitMix64(init_seed));
  std::vector<double> w(static_cast<size_t>(dimension));
  for (auto& v : w) v = init_scale * normal.Next();
  return w;
}

AppConfig ParseAppConfig(const json& j) {
  if (!j.is_object()) Bad("", "app config must be a JSON object");
  RejectUnknown(j,
                {"dimension", "epochs", "lr", "task_seed", "noise", "init_seed",
                 "init_scale", "train_examples", "test_examples", "sites", "num_rounds",
                 "strategy", "strategy_params", "min_clients", "poll_ms"},
                "");
  AppConfig c;
  c.dimension = GetInt(j, "dimension", c.dimension, 1);
  c.epochs = static_cast<int>(GetInt(j, "epochs", c.epochs, 1));
  c.lr = GetDouble(j, "lr", c.lr, 0.0);
  c.task_seed = GetSeed(j, "task_seed", c.task_seed);
  c.noise = GetDouble(j, "noise", c.noise, 0.0);
  c.init_seed = GetSeed(j, "init_seed", c.init_seed);
  c.init_scale = GetDouble(j, "init_scale", c.init_scale, 0.0);
  c.train_examples = GetInt(j, "train_examples", c.train_examples, 1);
  c.test_examples = GetInt(j, "test_examples", c.test_examples, 1);
  c.num_rounds = static_cast<int>(GetInt(j, "num_rounds", c.num_rounds, 1));
  c.min_clients = static_cast<int>(GetInt(j, "min_clients", c.min_clients, 1));
  c.poll_ms = GetInt(j, "poll_ms", c.poll_ms, 1);
  if (j.contains("strategy")) {
    if (!j["strategy"].is_string()) Bad("strategy", "expected a string");
    std::string s = j["strategy"].get<std::string>();
    if (s == "FEDAVG") {
      c.strategy = StrategyKind::kFedAvg;
    } else if (s == "FEDADAM") {
      c.strategy = StrategyKind::kFedAdam;
    } else {
      Bad("strategy", "expected FEDAVG or FEDADAM, got '" + s + "'");
    }
  }
  if (j.contains("strategy_params")) {
    const json& p = j["strategy_params"];
    if (!p.is_object()) Bad("strategy_params", "expected an object");
    RejectUnknown(p, {"eta", "beta_1", "beta_2", "tau"}, "strategy_params.");
    c.fedadam.eta = GetDouble(p, "eta", c.fedadam.eta, 0.0);
    c.fedadam.beta_1 = GetDouble(p, "beta_1", c.fedadam.beta_1, 0.0);
    c.fedadam.beta_2 = GetDouble(p, "beta_2", c.fedadam.beta_2, 0.0);
    c.fedadam.tau = GetDouble(p, "tau", c.fedadam.tau, 0.0);
    if (c.fedadam.beta_1 > 1 || c.fedadam.beta_2 > 1) Bad("strategy_params", "betas must be <= 1");
  }
  if (j.contains("sites")) {
    const json& sites = j["sites"];
    if (!sites.is_object()) Bad("sites", "expected an object keyed by site name");
    for (const auto& [name, s] : sites.items()) {
      std::string where = "sites." + name + ".";
      if (!wire::IsValidSiteName(name) || name == wire::kServerSite) {
        Bad("sites." + name, "invalid site name");
      }
      if (!s.is_object()) Bad("sites." + name, "expected an object");
      RejectUnknown(s, {"seed", "train_examples", "test_examples"}, where);
      SiteDataConfig sc;
      sc.seed = GetSeed(s, "seed", SplitMix64(c.task_seed ^ Fnv1a(name)), where);
      sc.train_examples = GetInt(s, "train_examples", c.train_examples, 1, where);
      sc.test_examples = GetInt(s, "test_examples", c.test_examples, 1, where);
      c.sites[name] = sc;
    }
  }
  return c;
}

AppConfig LoadAppConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kInvalidConfig, path.string() + " is not valid JSON");
  return ParseAppConfig(j);
}

json AppConfigToJson(const AppConfig& c) {
  json j;
  j["dimension"] = c.dimension;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["task_seed"] = c.task_seed;
  j["noise"] = c.noise;
  j["init_seed"] = c.init_seed;
  j["init_scale"] = c.init_scale;
  j["train_examples"] = c.train_examples;
  j["test_examples"] = c.test_examples;
  json sites = json::object();
  for (const auto& [name, s] : c.sites) {
    sites[name] = {{"seed", s.seed},
                   {"train_examples", s.train_examples},
                   {"test_examples", s.test_examples}};
  }
  j["sites"] = sites;
  j["num_rounds"] = c.num_rounds;
  j["strategy"] = c.strategy == StrategyKind::kFedAvg ? "FEDAVG" : "FEDADAM";
  j["strategy_params"] = {{"eta", c.fedadam.eta},
                          {"beta_1", c.fedadam.beta_1},
                          {"beta_2", c.fedadam.beta_2},
                          {"tau", c.fedadam.tau}};
  j["min_clients"] = c.min_clients;
  j["poll_ms"] = c.poll_ms;
  return j;
}

}  // namespace fedbridge::guestfl
