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

#include <benchmark/benchmark.h>

#include <random>

#include "fedbridge/guestfl/direct.h"
#include "fedbridge/guestfl/strategy.h"
#include "fedbridge/netsim/fabric.h"
#include "fedbridge/wire/codec.h"
#include "unit/fl_fixtures.h"
#include "unit/reliable_harness.h"

namespace fedbridge {
namespace {

wire::Envelope SampleEnvelope(size_t payload_bytes) {
  wire::Envelope env;
  env.msg_id = wire::MsgId(0x0123456789abcdefULL, 42);
  env.kind = wire::MessageKind::kRequest;
  env.job_id = "bench-job";
  env.src = {"site1", "bench-job"};
  env.dst = {"server", "bench-job"};
  env.payload.assign(payload_bytes, 'x');
  return env;
}

void BM_EncodeEnvelope(benchmark::State& state) {
  const wire::Envelope env = SampleEnvelope(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(wire::EncodeEnvelope(env));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeEnvelope)->Range(64, 64 << 10);

void BM_DecodeEnvelope(benchmark::State& state) {
  const std::string frame = wire::EncodeEnvelope(SampleEnvelope(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(wire::DecodeEnvelope(frame));
  state.SetBytesProcessed(state.iterations() * frame.size());
}
BENCHMARK(BM_DecodeEnvelope)->Range(64, 64 << 10);

void BM_FabricSendStep(benchmark::State& state) {
  const wire::SiteAddress a{"site1", ""}, b{"server", ""};
  netsim::Fabric fabric;
  netsim::LinkId link = fabric.Connect(a, b, {0.1, 0.1, 1, 20, false, 7});
  const std::string frame(256, 'f');
  for (auto _ : state) {
    for (int i = 0; i < 100; ++i) fabric.Send(link, a, frame);
    benchmark::DoNotOptimize(fabric.Step(25));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_FabricSendStep);

void BM_ReliableCallsUnderLoss(benchmark::State& state) {
  const double drop = state.range(0) / 100.0;
  for (auto _ : state) {
    testing::ReliablePair pair({drop, 0.2, 0, 50, false, 3});
    pair.responder.ServeSync([](const wire::Envelope& req) { return req.payload; });
    reliable::Timeouts t;
    t.send_deadline_ms = 600'000;
    t.result_deadline_ms = 600'000;
    int done = 0;
    for (int i = 0; i < 200; ++i) {
      pair.requester.Call(testing::ReliablePair::kResponder, wire::MessageKind::kRequest, "job",
                          "p", t, 0, [&](const reliable::CallOutcome&) { ++done; });
    }
    pair.RunUntil([&] { return done == 200; }, 10'000'000);
  }
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_ReliableCallsUnderLoss)->Arg(0)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_FedAvg(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<guestfl::FitResult> results(8);
  for (auto& r : results) {
    r.weights.weights.resize(state.range(0));
    for (auto& w : r.weights.weights) w = u(rng);
    r.num_examples = 100;
  }
  for (auto _ : state) benchmark::DoNotOptimize(guestfl::AggregateFedAvg(results));
  state.SetItemsProcessed(state.iterations() * 8 * state.range(0));
}
BENCHMARK(BM_FedAvg)->Range(16, 1 << 16);

void BM_DirectRun(benchmark::State& state) {
  const guestfl::AppConfig app = testing::SmallApp();
  for (auto _ : state) benchmark::DoNotOptimize(guestfl::RunDirect(app));
}
BENCHMARK(BM_DirectRun)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace fedbridge

BENCHMARK_MAIN();
