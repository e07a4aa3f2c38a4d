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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "fedbridge/bridge/bridge.h"
#include "fedbridge/error.h"
#include "fedbridge/guestfl/direct.h"
#include "fedbridge/guestfl/node.h"
#include "fedbridge/guestfl/server_app.h"
#include "fedbridge/wire/base64.h"
#include "unit/bridge_rig.h"
#include "unit/fl_fixtures.h"

namespace fedbridge::bridge {
namespace {

using testing::BridgeRig;
using testing::FrameResponder;
using testing::ScriptedGuest;

netsim::LinkPolicy Lossy(double drop, uint64_t seed, double dup = 0.0) {
  netsim::LinkPolicy p;
  p.drop_prob = drop;
  p.dup_prob = dup;
  p.latency_min_ms = 1;
  p.latency_max_ms = 30;
  p.seed = seed;
  return p;
}

std::vector<std::string> Script(size_t n, const std::string& tag) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) out.push_back(tag + "-msg-" + std::to_string(i));
  return out;
}

// Stateful responder: the reply depends on the body and on how many frames
// this connection has seen, so reordering or loss would show.
std::string Transform(const std::string& body, size_t conn, size_t count) {
  std::string r(body.rbegin(), body.rend());
  return r + "|" + std::to_string(conn) + ":" + std::to_string(count);
}

struct CountingResponder {
  std::map<size_t, size_t> counts;
  FrameResponder::Fn fn() {
    return [this](const std::string& body, size_t conn) {
      return Transform(body, conn, counts[conn]++);
    };
  }
};

// The same session with the guest dialing the responder directly.
std::vector<std::string> DirectTranscript(const std::vector<std::string>& script) {
  net::InProcListener listener;
  net::InProcDialer dialer(&listener);
  CountingResponder counting;
  FrameResponder responder(&listener, counting.fn());
  ScriptedGuest guest(&dialer, script);
  std::vector<net::Actor*> actors{&guest, &responder};
  net::RunActors(actors, [&] { return guest.done(); }, 0, 1'000'000);
  return guest.transcript;
}

TEST(GuestMessage, RoundTripAndRejects) {
  GuestMessage m{7, 42, Direction::kToNode, std::string("\0\xff body", 7)};
  std::string bytes = EncodeGuestMessage(m);
  EXPECT_EQ(bytes.size(), 17u + 7u);
  EXPECT_EQ(bytes.substr(0, 8), std::string("\0\0\0\0\0\0\0\x07", 8));
  EXPECT_EQ(DecodeGuestMessage(bytes), m);
  EXPECT_THROW(DecodeGuestMessage(bytes.substr(0, 16)), Error);
  std::string bad_dir = bytes;
  bad_dir[16] = 3;
  EXPECT_THROW(DecodeGuestMessage(bad_dir), Error);
  EXPECT_THROW(DecodeGuestMessage(EncodeGuestMessage({0, 1, Direction::kToLink, ""})), Error);
  EXPECT_THROW(DecodeGuestMessage(EncodeGuestMessage({1, 0, Direction::kToLink, ""})), Error);
}

TEST(Lgs, FirstMessageGetsSeqOneAndNewStreamsRestart) {
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  std::vector<GuestMessage> seen;
  FrameResponder responder(&link_listener, [](const std::string& b, size_t) { return b; });
  BridgeRig rig({"site1"}, Lossy(0.0, 1), &link_dialer);
  rig.server().Serve([&](const wire::Envelope& req, reliable::Endpoint::Completion done) {
    seen.push_back(DecodeGuestMessage(req.payload));
    rig.lgc().Handle(req, std::move(done));
  });
  rig.Add(&responder);
  net::InProcDialer lgs_dialer(&rig.site("site1").listener);
  ScriptedGuest first(&lgs_dialer, {"a"});
  rig.Add(&first);
  ASSERT_TRUE(rig.RunUntil([&] { return first.done(); }, 100'000));
  ScriptedGuest second(&lgs_dialer, {"b", "c"});
  rig.Add(&second);
  ASSERT_TRUE(rig.RunUntil([&] { return second.done(); }, 200'000));
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_EQ(seen[0].seq, 1u);
  EXPECT_EQ(seen[0].body, "a");
  EXPECT_NE(seen[1].stream_id, seen[0].stream_id);
  EXPECT_EQ(seen[1].seq, 1u);
  EXPECT_EQ(seen[2].seq, 2u);
  EXPECT_EQ(rig.site("site1").lgs->stats().streams, 2u);
}

TEST(Lgs, ScriptedFiftyMessageSessionArrivesInOrder) {
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  CountingResponder counting;
  FrameResponder responder(&link_listener, counting.fn());
  BridgeRig rig({"site1"}, Lossy(0.2, 5, 0.2), &link_dialer);
  rig.Add(&responder);
  net::InProcDialer lgs_dialer(&rig.site("site1").listener);
  auto script = Script(50, "s");
  ScriptedGuest guest(&lgs_dialer, script);
  rig.Add(&guest);
  ASSERT_TRUE(rig.RunUntil([&] { return guest.done(); }, 3'600'000));
  EXPECT_EQ(responder.received, script);
  EXPECT_EQ(guest.transcript, DirectTranscript(script));
}

TEST(Bridge, EchoIdentity) {
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  FrameResponder echo(&link_listener, [](const std::string& b, size_t) { return b; });
  BridgeRig rig({"site1"}, Lossy(0.0, 2), &link_dialer);
  rig.Add(&echo);
  net::InProcDialer lgs_dialer(&rig.site("site1").listener);
  auto script = Script(10, "echo");
  ScriptedGuest guest(&lgs_dialer, script);
  rig.Add(&guest);
  ASSERT_TRUE(rig.RunUntil([&] { return guest.done(); }, 100'000));
  EXPECT_EQ(guest.responses, script);
}

class NoRoute : public net::StreamDialer {
 public:
  std::unique_ptr<net::ByteStream> Dial() override { return nullptr; }
};

TEST(Bridge, GuestLinkDownIsPeerFault) {
  NoRoute down;
  BridgeRig rig({"site1"}, Lossy(0.0, 3), &down);
  net::InProcDialer lgs_dialer(&rig.site("site1").listener);
  ScriptedGuest guest(&lgs_dialer, {"hello"});
  rig.Add(&guest);
  auto& failures = rig.site("site1").failures;
  ASSERT_TRUE(rig.RunUntil([&] { return !failures.empty(); }, 100'000));
  EXPECT_TRUE(failures[0].second);
  EXPECT_NE(failures[0].first.find("guest link unreachable"), std::string::npos);
  EXPECT_NE(failures[0].first.find("GUEST_FWD"), std::string::npos);
  EXPECT_EQ(rig.lgc().stats().dial_failures, 1u);
}

TEST(Bridge, LossySessionMatchesDirectRun) {
  auto script = Script(200, "lossy");
  auto direct = DirectTranscript(script);
  for (uint64_t seed : {11u, 12u, 13u}) {
    net::InProcListener link_listener;
    net::InProcDialer link_dialer(&link_listener);
    CountingResponder counting;
    FrameResponder responder(&link_listener, counting.fn());
    BridgeRig rig({"site1"}, Lossy(0.3, seed), &link_dialer);
    rig.Add(&responder);
    net::InProcDialer lgs_dialer(&rig.site("site1").listener);
    ScriptedGuest guest(&lgs_dialer, script);
    rig.Add(&guest);
    ASSERT_TRUE(rig.RunUntil([&] { return guest.done(); }, 24 * 3'600'000LL));
    EXPECT_EQ(guest.responses.size(), 200u);
    EXPECT_EQ(guest.transcript, direct) << "seed " << seed;
    EXPECT_TRUE(rig.site("site1").failures.empty());
    EXPECT_GT(rig.fabric.stats().dropped, 0u);
  }
}

TEST(Bridge, ConcurrentStreamsKeepTheirOwnResponses) {
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  CountingResponder counting;
  FrameResponder responder(&link_listener, counting.fn());
  BridgeRig rig({"site1"}, Lossy(0.2, 21), &link_dialer);
  rig.Add(&responder);
  net::InProcDialer lgs_dialer(&rig.site("site1").listener);
  auto sa = Script(30, "alpha");
  auto sb = Script(30, "beta");
  ScriptedGuest a(&lgs_dialer, sa), b(&lgs_dialer, sb);
  rig.Add(&a);
  rig.Add(&b);
  ASSERT_TRUE(rig.RunUntil([&] { return a.done() && b.done(); }, 24 * 3'600'000LL));
  // Each guest sees exactly its own bodies, transformed in its own order.
  for (size_t i = 0; i < 30; ++i) {
    std::string ra(sa[i].rbegin(), sa[i].rend()), rb(sb[i].rbegin(), sb[i].rend());
    EXPECT_EQ(a.responses[i].substr(0, ra.size()), ra);
    EXPECT_EQ(b.responses[i].substr(0, rb.size()), rb);
    EXPECT_TRUE(a.responses[i].ends_with(":" + std::to_string(i)));
    EXPECT_TRUE(b.responses[i].ends_with(":" + std::to_string(i)));
  }
  EXPECT_EQ(rig.lgc().stats().connections, 2u);
}

TEST(Bridge, TwoSitesShareOneLinkWithoutMixing) {
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  CountingResponder counting;
  FrameResponder responder(&link_listener, counting.fn());
  BridgeRig rig({"site1", "site2"}, Lossy(0.3, 8), &link_dialer);
  rig.Add(&responder);
  net::InProcDialer d1(&rig.site("site1").listener), d2(&rig.site("site2").listener);
  auto s1 = Script(25, "one");
  auto s2 = Script(25, "two");
  ScriptedGuest g1(&d1, s1), g2(&d2, s2);
  rig.Add(&g1);
  rig.Add(&g2);
  ASSERT_TRUE(rig.RunUntil([&] { return g1.done() && g2.done(); }, 24 * 3'600'000LL));
  // Both sites used stream id 1; the LGC keys connections by site too.
  EXPECT_EQ(rig.lgc().stats().connections, 2u);
  for (size_t i = 0; i < 25; ++i) {
    EXPECT_TRUE(g1.responses[i].starts_with(std::string(s1[i].rbegin(), s1[i].rend())));
    EXPECT_TRUE(g2.responses[i].starts_with(std::string(s2[i].rbegin(), s2[i].rend())));
  }
}

TEST(Bridge, ResponseForClosedStreamIsDropped) {
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  FrameResponder echo(&link_listener, [](const std::string& b, size_t) { return b; });
  BridgeRig rig({"site1"}, Lossy(0.0, 4), &link_dialer);
  rig.Add(&echo);
  auto& site = rig.site("site1");
  auto stream = site.listener.Dial();
  net::FramedConnection conn(std::move(stream));
  conn.WriteFrame("orphan");
  // Let the LGS read the request, then hang up before the response returns.
  ASSERT_TRUE(rig.RunUntil([&] { return site.lgs->stats().forwarded == 1; }, 10'000));
  conn.Close();
  ASSERT_TRUE(rig.RunUntil([&] { return site.lgs->stats().dropped_closed == 1; }, 100'000));
  EXPECT_TRUE(site.failures.empty());
  net::InProcDialer lgs_dialer(&site.listener);
  ScriptedGuest later(&lgs_dialer, {"again"});
  rig.Add(&later);
  ASSERT_TRUE(rig.RunUntil([&] { return later.done(); }, 200'000));
  EXPECT_EQ(later.responses[0], "again");
}

TEST(Bridge, RandomBodiesTransitUntouched) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(0, 3000), byte(0, 255);
  std::vector<std::string> script;
  for (int i = 0; i < 60; ++i) {
    std::string b(len(rng), '\0');
    for (auto& c : b) c = static_cast<char>(byte(rng));
    script.push_back(std::move(b));
  }
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  FrameResponder echo(&link_listener, [](const std::string& b, size_t) { return b; });
  BridgeRig rig({"site1"}, Lossy(0.3, 31, 0.2), &link_dialer);
  rig.Add(&echo);
  net::InProcDialer lgs_dialer(&rig.site("site1").listener);
  ScriptedGuest guest(&lgs_dialer, script);
  rig.Add(&guest);
  ASSERT_TRUE(rig.RunUntil([&] { return guest.done(); }, 24 * 3'600'000LL));
  EXPECT_EQ(echo.received, script);
  EXPECT_EQ(guest.responses, script);
}

// Writes all of its frames at once; the bridge must still forward them one
// at a time.
class PipelinedGuest : public net::Actor {
 public:
  PipelinedGuest(net::StreamDialer* dialer, std::vector<std::string> script)
      : conn_(dialer->Dial()), script_(std::move(script)) {
    for (const auto& s : script_) conn_.WriteFrame(s);
  }
  void Tick(int64_t now) override {
    now_ = now;
    while (auto b = conn_.ReadFrame()) responses.push_back(*b);
  }
  std::optional<int64_t> NextWakeup() const override {
    return conn_.HasInput() ? std::optional<int64_t>(now_) : std::nullopt;
  }
  std::vector<std::string> responses;

 private:
  net::FramedConnection conn_;
  std::vector<std::string> script_;
  int64_t now_ = 0;
};

TEST(Bridge, OneCallInFlightPerStream) {
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  FrameResponder echo(&link_listener, [](const std::string& b, size_t) { return b; });
  BridgeRig rig({"site1"}, Lossy(0.2, 6), &link_dialer);
  rig.Add(&echo);
  net::InProcDialer lgs_dialer(&rig.site("site1").listener);
  auto script = Script(20, "pipe");
  PipelinedGuest guest(&lgs_dialer, script);
  rig.Add(&guest);
  size_t max_in_flight = 0;
  ASSERT_TRUE(rig.RunUntil(
      [&] {
        max_in_flight = std::max(max_in_flight, rig.site("site1").endpoint->in_flight());
        return guest.responses.size() == script.size();
      },
      24 * 3'600'000LL));
  EXPECT_EQ(max_in_flight, 1u);
  EXPECT_EQ(guest.responses, script);
}

TEST(Bridge, OversizedGuestFrameResetsStreamAndFails) {
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  FrameResponder echo(&link_listener, [](const std::string& b, size_t) { return b; });
  BridgeRig rig({"site1"}, Lossy(0.0, 7), &link_dialer);
  rig.Add(&echo);
  auto& site = rig.site("site1");
  auto stream = site.listener.Dial();
  stream->Write(std::string("\xff\xff\xff\xff", 4));
  ASSERT_TRUE(rig.RunUntil([&] { return !site.failures.empty(); }, 10'000));
  EXPECT_EQ(site.lgs->stats().resets, 1u);
  EXPECT_TRUE(stream->PeerClosed());
}

TEST(Bridge, TranscriptRecordsBothDirections) {
  auto dir = std::filesystem::temp_directory_path() / "fedbridge_bridge_transcript";
  std::filesystem::remove_all(dir);
  net::InProcListener link_listener;
  net::InProcDialer link_dialer(&link_listener);
  FrameResponder echo(&link_listener, [](const std::string& b, size_t) { return b + "!"; });
  BridgeRig rig({"site1"}, Lossy(0.0, 9), &link_dialer, BridgeRig::FastTimeouts(), dir.string());
  rig.Add(&echo);
  net::InProcDialer lgs_dialer(&rig.site("site1").listener);
  ScriptedGuest guest(&lgs_dialer, {"x", "y"});
  rig.Add(&guest);
  ASSERT_TRUE(rig.RunUntil([&] { return guest.done(); }, 100'000));
  std::ifstream in(dir / "site1" / "bridge.jsonl");
  std::vector<nlohmann::json> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0]["direction"], "TO_LINK");
  EXPECT_EQ(lines[1]["direction"], "TO_NODE");
  EXPECT_EQ(*wire::Base64Decode(lines[1]["body_b64"].get<std::string>()), "x!");
  EXPECT_EQ(lines[3]["seq"], 2);
  std::filesystem::remove_all(dir);
}

// Guest FL through the bridge reproduces the direct run exactly.
TEST(Bridge, FederatedRunMatchesDirectHistory) {
  for (auto strategy : {guestfl::StrategyKind::kFedAvg, guestfl::StrategyKind::kFedAdam}) {
    guestfl::AppConfig app = testing::SmallApp(strategy);
    guestfl::DirectResult direct = guestfl::RunDirect(app);
    ASSERT_TRUE(direct.ok);

    net::InProcListener link_listener;
    net::InProcDialer link_dialer(&link_listener);
    guestfl::GuestLink link(app, 2);
    guestfl::GuestLinkServer link_server(&link, &link_listener);
    BridgeRig rig({"site1", "site2"}, Lossy(0.3, 17, 0.1), &link_dialer);
    rig.Add(&link_server);
    net::InProcDialer d1(&rig.site("site1").listener), d2(&rig.site("site2").listener);
    guestfl::GuestNode n1("site1", guestfl::ClientApp(app.MakeSiteData("site1"), app.epochs, app.lr),
                          &d1, app.poll_ms);
    guestfl::GuestNode n2("site2", guestfl::ClientApp(app.MakeSiteData("site2"), app.epochs, app.lr),
                          &d2, app.poll_ms);
    rig.Add(&n1);
    rig.Add(&n2);
    ASSERT_TRUE(rig.RunUntil([&] { return link.finished(); }, 24 * 3'600'000LL));
    ASSERT_EQ(link.state(), guestfl::GuestLink::State::kDone) << link.failure_reason();
    EXPECT_EQ(guestfl::HistoryToJson(link.history()), guestfl::HistoryToJson(direct.history));
    EXPECT_EQ(link.history(), direct.history);
  }
}

}  // namespace
}  // namespace fedbridge::bridge
