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

#include <map>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "fedbridge/error.h"
#include "fedbridge/reliable/endpoint.h"
#include "reliable_harness.h"

namespace fedbridge::reliable {
namespace {

using testing::ReliablePair;
using wire::MessageKind;

int Count(const std::vector<Envelope>& sent, MessageKind kind) {
  int n = 0;
  for (const auto& e : sent) n += e.kind == kind;
  return n;
}

struct CallProbe {
  std::optional<CallOutcome> outcome;
  Endpoint::CallCallback Callback() {
    return [this](const CallOutcome& o) { outcome = o; };
  }
  bool done() const { return outcome.has_value(); }
};

TEST(ReliableTest, HappyPathLossless) {
  ReliablePair pair(netsim::LinkPolicy{});
  pair.responder.ServeSync([](const Envelope& req) { return "echo:" + req.payload; });
  CallProbe probe;
  pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "ping",
                      Timeouts{}, 0, probe.Callback());
  ASSERT_TRUE(pair.RunUntil([&] { return probe.done(); }, 10'000));
  EXPECT_TRUE(probe.outcome->ok());
  EXPECT_EQ(probe.outcome->result, "echo:ping");
  EXPECT_EQ(probe.outcome->via, ResultPath::kResponse);
  EXPECT_EQ(Count(pair.sent, MessageKind::kRequest), 1);
  EXPECT_EQ(probe.outcome->attempts, 1u);
}

TEST(ReliableTest, PartitionedLinkFailsWithSendTimeout) {
  for (auto [deadline, expected_attempts] : {std::pair{1000, 4}, std::pair{1100, 5},
                                             std::pair{30'000, 120}}) {
    netsim::LinkPolicy p;
    p.partitioned = true;
    ReliablePair pair(p);
    pair.responder.ServeSync([](const Envelope&) { return std::string("never"); });
    Timeouts t;
    t.retry_ms = 250;
    t.send_deadline_ms = deadline;
    CallProbe probe;
    pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "x", t, 0,
                        probe.Callback());
    ASSERT_TRUE(pair.RunUntil([&] { return probe.done(); }, deadline));
    EXPECT_EQ(probe.outcome->state, CallState::kFailed);
    EXPECT_EQ(probe.outcome->failure, Failure::kSendTimeout);
    EXPECT_EQ(probe.outcome->attempts, static_cast<uint32_t>(expected_attempts));
    EXPECT_EQ(probe.outcome->completed_t, deadline);
    EXPECT_EQ(pair.responder.stats().handler_invocations, 0u);
  }
}

TEST(ReliableTest, ResultTimeoutWhenResponderNeverFinishes) {
  ReliablePair pair(netsim::LinkPolicy{});
  pair.responder.Serve([](const Envelope&, Endpoint::Completion) {});
  Timeouts t;
  t.query_ms = 100;
  t.result_deadline_ms = 1000;
  CallProbe probe;
  pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "x", t, 0,
                      probe.Callback());
  ASSERT_TRUE(pair.RunUntil([&] { return probe.done(); }, 5000));
  EXPECT_EQ(probe.outcome->failure, Failure::kResultTimeout);
  EXPECT_EQ(probe.outcome->completed_t, 1000);
  EXPECT_EQ(Count(pair.sent, MessageKind::kQuery), 9);  // t = 100..900
}

TEST(ReliableTest, DuplicateRequestsExecuteOnceAndAllAreAnswered) {
  netsim::LinkPolicy p;
  p.dup_prob = 1.0;
  ReliablePair pair(p);
  int invocations = 0;
  pair.responder.ServeSync([&](const Envelope& req) {
    ++invocations;
    return req.payload + "!";
  });
  CallProbe probe;
  pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "a",
                      Timeouts{}, 0, probe.Callback());
  ASSERT_TRUE(pair.RunUntil([&] { return probe.done(); }, 1000));
  pair.RunUntil([] { return false; }, 50);  // let the second copy land
  EXPECT_EQ(invocations, 1);
  EXPECT_EQ(pair.responder.stats().duplicate_requests, 1u);
  EXPECT_EQ(pair.responder.stats().results_pushed, 2u);
  for (const auto& e : pair.sent) {
    if (e.kind == MessageKind::kResponse) EXPECT_EQ(e.payload, "Ra!");
  }
}

TEST(ReliableTest, DuplicateWhilePendingIsIgnored) {
  ReliablePair pair(netsim::LinkPolicy{});
  int invocations = 0;
  Endpoint::Completion held;
  pair.responder.Serve([&](const Envelope&, Endpoint::Completion done) {
    ++invocations;
    held = done;
  });
  Envelope req;
  req.msg_id = wire::MsgId(9, 9);
  req.job_id = "job";
  req.src = ReliablePair::kRequester;
  req.dst = ReliablePair::kResponder;
  req.kind = MessageKind::kRequest;
  pair.responder.OnEnvelope(req, 0);
  req.attempt = 2;
  pair.responder.OnEnvelope(req, 10);
  EXPECT_EQ(invocations, 1);
  EXPECT_EQ(pair.responder.stats().results_pushed, 0u);
  held(true, "late");
  EXPECT_EQ(pair.responder.cache().Find(req.msg_id)->status, EntryStatus::kReady);
  EXPECT_EQ(pair.responder.stats().results_pushed, 1u);
}

TEST(ReliableTest, QueryBeforeRequestIsUnknown) {
  ReliablePair pair(netsim::LinkPolicy{});
  pair.responder.ServeSync([](const Envelope&) { return std::string(); });
  Envelope query;
  query.msg_id = wire::MsgId(5, 5);
  query.correlation_id = wire::MsgId(6, 6);
  query.job_id = "job";
  query.src = ReliablePair::kRequester;
  query.dst = ReliablePair::kResponder;
  query.kind = MessageKind::kQuery;
  pair.responder.OnEnvelope(query, 0);
  ASSERT_EQ(pair.sent.size(), 1u);
  EXPECT_EQ(pair.sent[0].kind, MessageKind::kQueryResponse);
  EXPECT_EQ(pair.sent[0].payload, "U");
  EXPECT_EQ(pair.sent[0].correlation_id, query.correlation_id);
}

TEST(ReliableTest, HandlerExceptionBecomesPeerFault) {
  ReliablePair pair(netsim::LinkPolicy{});
  pair.responder.ServeSync([](const Envelope&) -> std::string {
    throw std::runtime_error("model exploded");
  });
  CallProbe probe;
  pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "x",
                      Timeouts{}, 0, probe.Callback());
  ASSERT_TRUE(pair.RunUntil([&] { return probe.done(); }, 1000));
  EXPECT_EQ(probe.outcome->state, CallState::kDone);
  EXPECT_FALSE(probe.outcome->peer_ok);
  EXPECT_FALSE(probe.outcome->ok());
  EXPECT_EQ(probe.outcome->result, "model exploded");
  EXPECT_NE(probe.outcome->Describe().find("PeerFault"), std::string::npos);
}

TEST(ReliableTest, GuestForwardIsAnsweredWithGuestReturn) {
  ReliablePair pair(netsim::LinkPolicy{});
  pair.responder.ServeSync([](const Envelope& req) { return req.payload; });
  CallProbe probe;
  pair.requester.Call(ReliablePair::kResponder, MessageKind::kGuestFwd, "job", "body",
                      Timeouts{}, 0, probe.Callback());
  ASSERT_TRUE(pair.RunUntil([&] { return probe.done(); }, 1000));
  EXPECT_EQ(Count(pair.sent, MessageKind::kGuestRet), 1);
  EXPECT_EQ(Count(pair.sent, MessageKind::kResponse), 0);
  EXPECT_EQ(probe.outcome->result, "body");
}

TEST(ReliableTest, NonRequestKindIsRejected) {
  ReliablePair pair(netsim::LinkPolicy{});
  EXPECT_THROW(pair.requester.Call(ReliablePair::kResponder, MessageKind::kMetric, "job",
                                   "x", Timeouts{}, 0, nullptr),
               Error);
  Timeouts bad;
  bad.retry_ms = 0;
  EXPECT_THROW(pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job",
                                   "x", bad, 0, nullptr),
               Error);
}

TEST(ReliableTest, AbortAllFailsPendingCalls) {
  ReliablePair pair(netsim::LinkPolicy{});
  pair.responder.Serve([](const Envelope&, Endpoint::Completion) {});
  CallProbe a, b;
  pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "1",
                      Timeouts{}, 0, a.Callback());
  pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "2",
                      Timeouts{}, 0, b.Callback());
  pair.RunUntil([] { return false; }, 100);
  pair.requester.AbortAll("job aborted", 100);
  ASSERT_TRUE(a.done() && b.done());
  EXPECT_EQ(a.outcome->failure, Failure::kAborted);
  EXPECT_EQ(b.outcome->detail, "job aborted");
  EXPECT_EQ(pair.requester.in_flight(), 0u);
}

// Forcing one result path at a time yields the same bytes.
TEST(ReliableTest, ResultPathEquivalence) {
  std::string results[2];
  ResultPath paths[2];
  for (int mode = 0; mode < 2; ++mode) {
    netsim::LinkPolicy p;
    p.latency_max_ms = 40;
    p.seed = 17;
    ReliablePair pair(p);
    MessageKind blocked = mode == 0 ? MessageKind::kQueryResponse : MessageKind::kResponse;
    pair.filter = [blocked](const Envelope& e) { return e.kind != blocked; };
    pair.responder.Serve([&](const Envelope& req, Endpoint::Completion done) {
      pair.At(pair.now() + 700, [done, payload = req.payload] {
        done(true, "result-of-" + payload);
      });
    });
    CallProbe probe;
    Timeouts t;
    t.query_ms = 100;
    pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "q",
                        t, 0, probe.Callback());
    ASSERT_TRUE(pair.RunUntil([&] { return probe.done(); }, 10'000));
    ASSERT_TRUE(probe.outcome->ok());
    results[mode] = probe.outcome->result;
    paths[mode] = probe.outcome->via;
  }
  EXPECT_EQ(paths[0], ResultPath::kResponse);
  EXPECT_EQ(paths[1], ResultPath::kQueryResponse);
  EXPECT_EQ(results[0], results[1]);
}

// ---------------------------------------------------------------------------
// Brute-force millisecond-by-millisecond replay of one call over a lossy link,
// written independently of Endpoint and Fabric.

struct OracleResult {
  int64_t completed_t = -1;
  int attempts = 0;
  int queries = 0;
  bool via_query = false;
};

OracleResult OracleSlowResponder(uint64_t seed, double drop, int64_t lat_max,
                                 int64_t finish_at, int64_t query_ms,
                                 int64_t result_deadline_ms) {
  auto mix = [](uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::mt19937_64 rng[2] = {
      std::mt19937_64(mix(seed ^ (1 * 0xd1b54a32d192ed03ULL))),
      std::mt19937_64(mix(seed ^ (2 * 0xd1b54a32d192ed03ULL)))};
  enum Type { kReq, kQuery, kResp, kQr };
  struct Msg {
    Type type;
    int dir;
    char status;
  };
  std::map<std::pair<int64_t, uint64_t>, Msg> queue;
  uint64_t seq = 0;
  auto send = [&](int dir, Msg m, int64_t t) {
    auto u = [&] { return double(rng[dir]() >> 11) / 9007199254740992.0; };
    bool dropped = u() < drop;
    int64_t lat = int64_t(rng[dir]() % uint64_t(lat_max + 1));
    u();
    rng[dir]();
    if (!dropped) queue.emplace(std::pair{t + lat, seq++}, m);
  };

  OracleResult r;
  enum { kNone, kPending, kReady } responder = kNone;
  bool done = false;
  int64_t next_query = query_ms;
  send(0, {kReq, 0, 0}, 0);
  r.attempts = 1;
  for (int64_t t = 0; t <= result_deadline_ms && !done; ++t) {
    while (!queue.empty() && queue.begin()->first.first <= t) {
      Msg m = queue.begin()->second;
      queue.erase(queue.begin());
      if (m.dir == 0) {
        if (m.type == kReq) {
          if (responder == kNone) {
            responder = t >= finish_at ? kReady : kPending;
            if (responder == kReady) send(1, {kResp, 1, 'R'}, t);
          } else if (responder == kReady) {
            send(1, {kResp, 1, 'R'}, t);
          }
        } else {
          char s = responder == kNone ? 'U' : responder == kPending ? 'P' : 'R';
          send(1, {kQr, 1, s}, t);
        }
      } else if (!done) {
        if (m.status == 'R') {
          done = true;
          r.completed_t = t;
          r.via_query = m.type == kQr;
        } else if (m.status == 'U') {
          ++r.attempts;
          send(0, {kReq, 0, 0}, t);
        }
      }
    }
    if (responder == kPending && t >= finish_at) {
      responder = kReady;
      send(1, {kResp, 1, 'R'}, t);
    }
    if (!done && t >= next_query) {
      if (t >= result_deadline_ms) break;
      ++r.queries;
      send(0, {kQuery, 0, 0}, t);
      next_query = std::min(t + query_ms, result_deadline_ms);
    }
  }
  return r;
}

TEST(ReliableTest, LossySlowResponderMatchesEventTraceOracle) {
  int via_query_cases = 0;
  for (uint64_t seed : {3ULL, 8ULL, 21ULL, 34ULL, 55ULL}) {
    netsim::LinkPolicy p;
    p.drop_prob = 0.5;
    p.latency_max_ms = 50;
    p.seed = seed;
    ReliablePair pair(p);
    pair.responder.Serve([&](const Envelope&, Endpoint::Completion done) {
      if (pair.now() >= 800) {
        done(true, "slow");
      } else {
        pair.At(800, [done] { done(true, "slow"); });
      }
    });
    Timeouts t;
    t.query_ms = 100;
    t.result_deadline_ms = 60'000;
    CallProbe probe;
    pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "work",
                        t, 0, probe.Callback());
    ASSERT_TRUE(pair.RunUntil([&] { return probe.done(); }, 60'000));
    OracleResult oracle = OracleSlowResponder(seed, 0.5, 50, 800, 100, 60'000);
    SCOPED_TRACE(seed);
    EXPECT_EQ(probe.outcome->completed_t, oracle.completed_t);
    EXPECT_EQ(static_cast<int>(probe.outcome->attempts), oracle.attempts);
    EXPECT_EQ(static_cast<int>(pair.requester.FindCall(probe.outcome->msg_id)->queries),
              oracle.queries);
    EXPECT_EQ(probe.outcome->via == ResultPath::kQueryResponse, oracle.via_query);
    EXPECT_EQ(probe.outcome->result, "slow");
    EXPECT_GE(probe.outcome->completed_t, 800);
    via_query_cases += oracle.via_query;
  }
  EXPECT_GT(via_query_cases, 0);
}

// Many concurrent calls over a duplicating link execute exactly once each.
TEST(ReliableTest, HundredRequestsWithDuplicationInvokeHandlerHundredTimes) {
  netsim::LinkPolicy p;
  p.dup_prob = 0.3;
  p.latency_max_ms = 20;
  p.seed = 77;
  ReliablePair pair(p);
  std::map<std::string, int> per_payload;
  pair.responder.ServeSync([&](const Envelope& req) {
    ++per_payload[req.payload];
    return req.payload;
  });
  int completed = 0;
  for (int i = 0; i < 100; ++i) {
    pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job",
                        "r" + std::to_string(i), Timeouts{}, i,
                        [&](const CallOutcome& o) { completed += o.ok(); });
  }
  ASSERT_TRUE(pair.RunUntil([&] { return completed == 100; }, 60'000));
  EXPECT_EQ(pair.responder.stats().handler_invocations, 100u);
  EXPECT_EQ(per_payload.size(), 100u);
  for (const auto& [payload, n] : per_payload) EXPECT_EQ(n, 1) << payload;
  EXPECT_GT(pair.responder.stats().duplicate_requests, 0u);
}

TEST(ReliableTest, ExactlyOnceAcrossSeeds) {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    netsim::LinkPolicy p;
    p.drop_prob = 0.4;
    p.dup_prob = 0.3;
    p.latency_max_ms = 60;
    p.seed = seed;
    ReliablePair pair(p);
    std::map<wire::MsgId, int> executions;
    pair.responder.ServeSync([&](const Envelope& req) {
      ++executions[req.msg_id];
      return std::string("ok");
    });
    int finished = 0;
    Timeouts t;
    t.retry_ms = 50;
    t.query_ms = 50;
    t.result_deadline_ms = 120'000;
    for (int i = 0; i < 20; ++i) {
      pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "p", t,
                          0, [&](const CallOutcome&) { ++finished; });
    }
    ASSERT_TRUE(pair.RunUntil([&] { return finished == 20; }, 200'000));
    for (const auto& [id, n] : executions) EXPECT_EQ(n, 1);
  }
}

// drop 0.9, deadlines far beyond 50x the retry interval: every call finishes.
TEST(ReliableTest, AtLeastOnceCompletionUnderHeavyLoss) {
  int completed = 0;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    netsim::LinkPolicy p;
    p.drop_prob = 0.9;
    p.latency_max_ms = 5;
    p.seed = seed;
    ReliablePair pair(p);
    pair.responder.ServeSync([](const Envelope& req) { return "h:" + req.payload; });
    Timeouts t;
    t.retry_ms = 10;
    t.query_ms = 10;
    t.send_deadline_ms = 600'000;
    t.result_deadline_ms = 600'000;
    CallProbe probe;
    pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job",
                        std::to_string(seed), t, 0, probe.Callback());
    pair.RunUntil([&] { return probe.done(); }, 700'000);
    if (probe.done() && probe.outcome->ok() &&
        probe.outcome->result == "h:" + std::to_string(seed)) {
      ++completed;
    }
    EXPECT_LE(pair.responder.stats().handler_invocations, 1u);
  }
  EXPECT_EQ(completed, 200);
}

TEST(ReliableTest, FullPartitionTerminatesEveryCallWithinSendDeadline) {
  netsim::LinkPolicy p;
  p.partitioned = true;
  ReliablePair pair(p);
  Timeouts t;
  t.send_deadline_ms = 5000;
  int failed = 0;
  for (int i = 0; i < 10; ++i) {
    pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "x", t,
                        i * 37, [&](const CallOutcome& o) {
                          failed += o.state == CallState::kFailed;
                          EXPECT_LE(o.completed_t, 9 * 37 + 5000);
                        });
  }
  ASSERT_TRUE(pair.RunUntil([&] { return failed == 10; }, 5000 + 9 * 37));
}

// ---------------------------------------------------------------------------

TEST(ResultCacheTest, GcBoundaries) {
  ResultCache cache(1000);
  EXPECT_EQ(cache.Gc(0), 0u);
  cache.InsertPending(wire::MsgId(0, 1), CacheEntry{});
  cache.MarkReady(wire::MsgId(0, 1), true, "r", 500);
  EXPECT_EQ(cache.Gc(1499), 0u);
  EXPECT_EQ(cache.Gc(1500), 1u);  // aged exactly retention_ms
  cache.InsertPending(wire::MsgId(0, 2), CacheEntry{});
  EXPECT_EQ(cache.Gc(1'000'000), 0u);  // pending is never evicted
}

TEST(ResultCacheTest, RandomScheduleMatchesFilterOracle) {
  std::mt19937_64 rng(12);
  ResultCache cache(300);
  struct Shadow {
    bool ready;
    int64_t ready_t;
  };
  std::map<wire::MsgId, Shadow> shadow;
  int64_t now = 0;
  for (int step = 0; step < 2000; ++step) {
    now += static_cast<int64_t>(rng() % 20);
    switch (rng() % 3) {
      case 0: {
        wire::MsgId id(0, rng() % 500 + 1);
        if (cache.InsertPending(id, CacheEntry{})) shadow[id] = {false, 0};
        break;
      }
      case 1: {
        wire::MsgId id(0, rng() % 500 + 1);
        auto it = shadow.find(id);
        cache.MarkReady(id, true, "x", now);
        if (it != shadow.end() && !it->second.ready) it->second = {true, now};
        break;
      }
      default: {
        cache.Gc(now);
        std::erase_if(shadow, [&](const auto& kv) {
          return kv.second.ready && now - kv.second.ready_t >= 300;
        });
        ASSERT_EQ(cache.size(), shadow.size());
        for (const auto& [id, s] : shadow) ASSERT_NE(cache.Find(id), nullptr);
      }
    }
  }
}

TEST(ReliableTest, EndpointGcEvictsAgedResults) {
  reliable::Endpoint::Options options;
  options.retention_ms = 1000;
  ReliablePair pair(netsim::LinkPolicy{}, options);
  pair.responder.ServeSync([](const Envelope&) { return std::string("r"); });
  CallProbe probe;
  pair.requester.Call(ReliablePair::kResponder, MessageKind::kRequest, "job", "x",
                      Timeouts{}, 0, probe.Callback());
  ASSERT_TRUE(pair.RunUntil([&] { return probe.done(); }, 100));
  EXPECT_EQ(pair.responder.cache().size(), 1u);
  EXPECT_EQ(pair.responder.GcResults(999), 0u);
  EXPECT_EQ(pair.responder.GcResults(1000), 1u);
}

}  // namespace
}  // namespace fedbridge::reliable
