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

// fbctl: run scenarios, operate a running system, host sites and guest nodes.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedbridge/error.h"
#include "fedbridge/guestfl/node.h"
#include "fedbridge/runtime/simulation.h"
#include "fedbridge/runtime/sockets.h"
#include "fedbridge/tracking/metrics.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fedbridge;

namespace {

enum Exit {
  kExitOk = 0,
  kExitGeneric = 1,
  kExitBadInput = 2,
  kExitUnschedulable = 3,
  kExitFailed = 4,
  kExitUnknownId = 5,
};

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

int ExitForCode(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNeverSchedulable:
      return kExitUnschedulable;
    case ErrorCode::kUnknownJob:
      return kExitUnknownId;
    case ErrorCode::kIo:
      return kExitGeneric;
    default:
      return kExitBadInput;
  }
}

// Peer faults from the server arrive as "<CodeName>: message".
int ExitForFault(const std::string& text) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::kIo); ++c) {
    auto code = static_cast<ErrorCode>(c);
    std::string prefix = std::string(ErrorCodeName(code)) + ":";
    if (text.rfind(prefix, 0) == 0) return ExitForCode(code);
  }
  return kExitGeneric;
}

int ExitForState(runtime::JobState state) {
  return state == runtime::JobState::kFinished ? kExitOk : kExitFailed;
}

void PrintTransition(const runtime::Transition& t) {
  std::cout << t.t_ms << " " << t.job_id << " "
            << (t.from ? std::string(runtime::JobStateName(*t.from)) : "-") << " -> "
            << runtime::JobStateName(t.to);
  if (!t.reason.empty()) std::cout << ": " << t.reason;
  std::cout << std::endl;
}

void PrintFinal(const runtime::JobStatus& s) {
  std::cout << s.job_id << " " << runtime::JobStateName(s.state);
  if (s.failure_reason) std::cout << ": " << *s.failure_reason;
  std::cout << std::endl;
}

struct Bundle {
  runtime::JobSpec spec;
  std::optional<guestfl::AppConfig> app;
};

Bundle LoadBundle(const fs::path& path, runtime::Messaging default_messaging) {
  fs::path dir = fs::is_directory(path) ? path : path.parent_path();
  fs::path job_file = fs::is_directory(path) ? path / "job.json" : path;
  if (!fs::exists(job_file)) {
    throw Error(ErrorCode::kInvalidConfig, "no job.json at " + job_file.string());
  }
  Bundle b{runtime::LoadJobSpec(job_file, default_messaging), std::nullopt};
  for (const fs::path& candidate : {dir / "app.json", dir / "app" / "app.json"}) {
    if (fs::exists(candidate)) {
      b.app = guestfl::LoadAppConfig(candidate);
      break;
    }
  }
  return b;
}

struct Globals {
  std::string config;
  std::string mode = "sim";
  std::string log_level = "warn";
  std::string server;
};

std::optional<runtime::ScenarioConfig> MaybeScenario(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  return runtime::LoadScenario(g.config);
}

std::pair<std::string, uint16_t> ServerAddress(const Globals& g) {
  if (!g.server.empty()) {
    auto hp = net::ParseHostPort(g.server);
    if (!hp) throw Error(ErrorCode::kInvalidConfig, "--server expects host:port");
    return *hp;
  }
  if (auto s = MaybeScenario(g)) return {s->server_host, s->server_port};
  return {"127.0.0.1", 7700};
}

std::string CliName() { return "cli-" + std::to_string(::getpid()); }

reliable::Timeouts ControlTimeouts() {
  reliable::Timeouts t;
  t.retry_ms = 250;
  t.query_ms = 500;
  t.send_deadline_ms = 10'000;
  t.result_deadline_ms = 30'000;
  return t;
}

runtime::ClientOptions ClientOptionsFor(const runtime::ScenarioConfig& s, const std::string& site) {
  runtime::ClientOptions o;
  o.site = site;
  o.heartbeat_ms = s.heartbeat_ms;
  o.runs_dir = s.runs_dir;
  o.seed = s.seed;
  return o;
}

int RunSim(const runtime::ScenarioConfig& scenario, const Bundle& b) {
  runtime::Simulation sim(scenario);
  sim.server().set_on_transition(PrintTransition);
  runtime::JobStatus s = sim.RunJob(b.spec, b.app ? &*b.app : nullptr);
  PrintFinal(s);
  return ExitForState(s.state);
}

int RunSockets(const runtime::ScenarioConfig& scenario, const Bundle& b) {
  runtime::WallClock clock;
  runtime::ServerHost server(runtime::ServerOptions::FromScenario(scenario), 0);
  std::vector<std::unique_ptr<runtime::ClientHost>> clients;
  std::vector<runtime::SocketHost*> hosts{&server};
  for (const auto& site : scenario.sites) {
    clients.push_back(std::make_unique<runtime::ClientHost>(ClientOptionsFor(scenario, site.name),
                                                            "127.0.0.1", server.port()));
    hosts.push_back(clients.back().get());
  }
  for (const auto& e : scenario.events) {
    if (e.action != runtime::FaultAction::kAbort) {
      spdlog::warn("link fault events only apply in sim mode; ignoring event at t={}", e.t_ms);
    }
  }
  server.server().set_on_transition(PrintTransition);
  server.server().Submit(b.spec, b.app ? &*b.app : nullptr);
  size_t next_event = 0;
  const std::string& id = b.spec.job_id;
  while (!runtime::IsTerminal(server.server().Status(id).state)) {
    if (g_stop || clock.now() > scenario.time_limit_ms) {
      server.server().Abort(id, g_stop ? "interrupted" : "scenario time limit reached");
      break;
    }
    for (; next_event < scenario.events.size() && scenario.events[next_event].t_ms <= clock.now();
         ++next_event) {
      const auto& e = scenario.events[next_event];
      if (e.action == runtime::FaultAction::kAbort && e.job == id) {
        server.server().Abort(id, "operator abort");
      }
    }
    runtime::PollHosts(hosts, clock, 20);
  }
  runtime::JobStatus s = server.server().Status(id);
  PrintFinal(s);
  return ExitForState(s.state);
}

int CmdRun(const Globals& g, const fs::path& project) {
  fs::path scenario_path = g.config.empty() ? project / "scenario.json" : fs::path(g.config);
  runtime::ScenarioConfig scenario = runtime::LoadScenario(scenario_path);
  Bundle b = LoadBundle(project, scenario.messaging);
  if (g.mode == "sockets") return RunSockets(scenario, b);
  return RunSim(scenario, b);
}

int CmdSubmit(const Globals& g, const fs::path& job_path, bool follow) {
  runtime::Messaging messaging = runtime::Messaging::kRelay;
  if (auto s = MaybeScenario(g)) messaging = s->messaging;
  Bundle b = LoadBundle(job_path, messaging);
  auto [host, port] = ServerAddress(g);
  runtime::ControlClient cli(host, port, CliName());
  const std::string& id = b.spec.job_id;
  auto out = cli.Call(wire::MessageKind::kSubmit, id,
                      runtime::MakeSubmitPayload(b.spec, b.app ? &*b.app : nullptr),
                      ControlTimeouts());
  if (!out.ok()) {
    std::cerr << "submit failed: " << (out.state == reliable::CallState::kDone ? out.result
                                                                               : out.Describe())
              << std::endl;
    return out.state == reliable::CallState::kDone ? ExitForFault(out.result) : kExitGeneric;
  }
  std::cout << id << std::endl;
  if (!follow) return kExitOk;
  size_t printed = 0;
  while (!g_stop) {
    auto ev = cli.Call(wire::MessageKind::kStatus, id, runtime::MakeEventsQuery(id),
                       ControlTimeouts());
    if (!ev.ok()) {
      std::cerr << "status failed: " << ev.Describe() << std::endl;
      return kExitGeneric;
    }
    json events = json::parse(ev.result);
    for (; printed < events.size(); ++printed) {
      PrintTransition(runtime::TransitionFromJson(events[printed]));
    }
    if (!events.empty()) {
      auto last = runtime::TransitionFromJson(events.back());
      if (runtime::IsTerminal(last.to)) {
        auto st = cli.Call(wire::MessageKind::kStatus, id, runtime::MakeStatusQuery(id),
                           ControlTimeouts());
        if (st.ok()) PrintFinal(runtime::JobStatusFromJson(json::parse(st.result)));
        return ExitForState(last.to);
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
  return kExitGeneric;
}

int CmdStatus(const Globals& g, const std::string& id) {
  auto [host, port] = ServerAddress(g);
  runtime::ControlClient cli(host, port, CliName());
  auto out = id.empty() ? cli.Call(wire::MessageKind::kStatus, "*", runtime::MakeListQuery(),
                                   ControlTimeouts())
                        : cli.Call(wire::MessageKind::kStatus, id, runtime::MakeStatusQuery(id),
                                   ControlTimeouts());
  if (!out.ok()) {
    std::cerr << out.Describe() << std::endl;
    return out.state == reliable::CallState::kDone ? ExitForFault(out.result) : kExitGeneric;
  }
  std::cout << json::parse(out.result).dump(2) << std::endl;
  return kExitOk;
}

int CmdAbort(const Globals& g, const std::string& id, const std::string& reason) {
  auto [host, port] = ServerAddress(g);
  runtime::ControlClient cli(host, port, CliName());
  auto out = cli.Call(wire::MessageKind::kAbort, id, runtime::MakeAbortPayload(id, reason),
                      ControlTimeouts());
  if (!out.ok()) {
    std::cerr << out.Describe() << std::endl;
    return out.state == reliable::CallState::kDone ? ExitForFault(out.result) : kExitGeneric;
  }
  PrintFinal(runtime::JobStatusFromJson(json::parse(out.result)));
  return kExitOk;
}

int CmdExport(const Globals& g, const std::string& id, const std::string& tag,
              const std::string& runs_arg, const std::string& out_arg) {
  fs::path runs = "runs";
  if (!runs_arg.empty()) {
    runs = runs_arg;
  } else if (auto s = MaybeScenario(g)) {
    runs = s->runs_dir;
  }
  fs::path log = runs / id / "metrics.jsonl";
  if (!fs::exists(runs / id)) {
    std::cerr << "unknown job " << id << " under " << runs << std::endl;
    return kExitUnknownId;
  }
  if (!fs::exists(log)) {
    std::cerr << "job " << id << " has no metrics log" << std::endl;
    return kExitBadInput;
  }
  fs::path out = out_arg.empty() ? runs / id / ("metrics_" + tag + ".csv") : fs::path(out_arg);
  tracking::ExportCsv(log, tag, out);
  std::cout << out.string() << std::endl;
  return kExitOk;
}

int CmdServe(const Globals& g, int port_override, bool any_interface) {
  if (g.config.empty()) throw Error(ErrorCode::kInvalidConfig, "serve needs --config");
  runtime::ScenarioConfig s = runtime::LoadScenario(g.config);
  uint16_t port = port_override >= 0 ? static_cast<uint16_t>(port_override) : s.server_port;
  runtime::WallClock clock;
  runtime::ServerHost server(runtime::ServerOptions::FromScenario(s), port, !any_interface);
  server.server().set_on_transition([](const runtime::Transition& t) {
    spdlog::info("{} {} -> {}: {}", t.job_id,
                 t.from ? runtime::JobStateName(*t.from) : std::string_view("-"),
                 runtime::JobStateName(t.to), t.reason);
  });
  std::cout << "listening on " << server.port() << std::endl;
  runtime::SocketHost* hosts[] = {&server};
  while (!g_stop) runtime::PollHosts(hosts, clock, 100);
  return kExitOk;
}

int CmdSite(const Globals& g, const std::string& name) {
  if (g.config.empty()) throw Error(ErrorCode::kInvalidConfig, "site needs --config");
  runtime::ScenarioConfig s = runtime::LoadScenario(g.config);
  if (!s.FindSite(name)) throw Error(ErrorCode::kInvalidConfig, "no site '" + name + "'");
  auto [host, port] = ServerAddress(g);
  runtime::WallClock clock;
  runtime::ClientHost client(ClientOptionsFor(s, name), host, port);
  client.client().set_on_deploy([](runtime::ClientWorker& w) {
    std::cout << "deployed " << w.job_id() << " lgs_port " << w.lgs_port() << std::endl;
  });
  runtime::SocketHost* hosts[] = {&client};
  while (!g_stop) runtime::PollHosts(hosts, clock, 100);
  return kExitOk;
}

int CmdGuestNode(const std::string& app_path, const std::string& site, const std::string& lgs) {
  guestfl::AppConfig app = guestfl::LoadAppConfig(app_path);
  auto hp = net::ParseHostPort(lgs);
  if (!hp) throw Error(ErrorCode::kInvalidConfig, "--lgs expects host:port");
  net::TcpDialer dialer(hp->first, hp->second);
  guestfl::ClientApp client(app.MakeSiteData(site), app.epochs, app.lr, nullptr);
  guestfl::GuestNode node(site, std::move(client), &dialer, app.poll_ms);
  runtime::WallClock clock;
  while (!node.finished() && !g_stop) {
    node.Tick(clock.now());
    int64_t wait = 50;
    if (auto next = node.NextWakeup()) wait = std::clamp<int64_t>(*next - clock.now(), 0, 50);
    std::this_thread::sleep_for(std::chrono::milliseconds(wait));
  }
  if (node.failed()) {
    std::cerr << "guest node failed: " << node.failure() << std::endl;
    return kExitFailed;
  }
  return node.done() ? kExitOk : kExitGeneric;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);

  CLI::App app{"fedbridge federated job runtime"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "scenario.json");
  app.add_option("--mode", g.mode, "sim or sockets")->check(CLI::IsMember({"sim", "sockets"}));
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off");
  app.add_option("--server", g.server, "host:port of a running server");

  fs::path project;
  auto* run = app.add_subcommand("run", "run a project (scenario.json + job.json) end to end");
  run->add_option("project", project)->required();

  auto* job = app.add_subcommand("job", "job operations");
  job->require_subcommand(1);
  fs::path job_path;
  bool no_follow = false;
  auto* submit = job->add_subcommand("submit", "submit a job bundle to a running server");
  submit->add_option("job_path", job_path)->required();
  submit->add_flag("--no-follow", no_follow, "return after the job is accepted");

  std::string job_id, reason = "aborted by operator", tag, runs_dir, out_path;
  auto* status = app.add_subcommand("status", "show one job, or all jobs");
  status->add_option("job_id", job_id);
  auto* abort = app.add_subcommand("abort", "abort a job");
  abort->add_option("job_id", job_id)->required();
  abort->add_option("--reason", reason);
  auto* exp = app.add_subcommand("export", "write metrics_<tag>.csv for a finished job");
  exp->add_option("job_id", job_id)->required();
  exp->add_option("tag", tag)->required();
  exp->add_option("--runs", runs_dir, "runs directory");
  exp->add_option("--out", out_path, "output file");

  int port = -1;
  bool any_interface = false;
  auto* serve = app.add_subcommand("serve", "host the server control process over TCP");
  serve->add_option("--port", port);
  serve->add_flag("--any-interface", any_interface, "listen on all interfaces");
  std::string site;
  auto* site_cmd = app.add_subcommand("site", "host a client site's control process");
  site_cmd->add_option("name", site)->required();

  std::string app_path, lgs;
  auto* node = app.add_subcommand("guest-node", "run one guest client node against an LGS");
  node->add_option("--app", app_path, "app.json")->required();
  node->add_option("--site", site)->required();
  node->add_option("--lgs", lgs, "host:port of the site's local guest server")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadInput;
  }
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*run) return CmdRun(g, project);
    if (*submit) return CmdSubmit(g, job_path, !no_follow);
    if (*status) return CmdStatus(g, job_id);
    if (*abort) return CmdAbort(g, job_id, reason);
    if (*exp) return CmdExport(g, job_id, tag, runs_dir, out_path);
    if (*serve) return CmdServe(g, port, any_interface);
    if (*site_cmd) return CmdSite(g, site);
    if (*node) return CmdGuestNode(app_path, site, lgs);
  } catch (const Error& e) {
    std::cerr << e.what() << std::endl;
    return ExitForCode(e.code());
  } catch (const std::exception& e) {
    std::cerr << e.what() << std::endl;
    return kExitGeneric;
  }
  return kExitGeneric;
}
