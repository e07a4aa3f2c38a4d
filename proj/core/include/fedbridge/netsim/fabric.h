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

#ifndef FEDBRIDGE_NETSIM_FABRIC_H_
#define FEDBRIDGE_NETSIM_FABRIC_H_

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fedbridge/wire/envelope.h"

namespace fedbridge::netsim {

using wire::SiteAddress;

struct LinkPolicy {
  double drop_prob = 0.0;
  double dup_prob = 0.0;
  int64_t latency_min_ms = 0;
  int64_t latency_max_ms = 0;
  bool partitioned = false;
  uint64_t seed = 0;

  // Throws Error(kInvalidConfig).
  void Validate() const;
};

struct LinkId {
  uint32_t value = 0;
  auto operator<=>(const LinkId&) const = default;
};

// Per-direction RNG stream. Each direction of a link owns a std::mt19937_64
// seeded with DirectionSeed(policy.seed, direction) where direction is 0 for
// frames sent by the first endpoint passed to Connect and 1 for the second.
// Every accepted send consumes exactly four draws, in order:
//   drop   = Uniform(draw) < drop_prob
//   lat    = latency_min + draw % (latency_max - latency_min + 1)
//   dup    = !drop && Uniform(draw) < dup_prob
//   duplat = latency_min + draw % (latency_max - latency_min + 1)
// where Uniform(x) = (x >> 11) * 2^-53. Partitioned sends consume nothing.
uint64_t DirectionSeed(uint64_t seed, int direction);
double UniformFromDraw(uint64_t draw);

struct Delivery {
  int64_t due_ms = 0;
  LinkId link;
  uint64_t seq = 0;
  SiteAddress from;
  SiteAddress to;
  std::string frame;
};

struct FabricStats {
  uint64_t accepted = 0;
  uint64_t refused = 0;  // sends on a partitioned direction
  uint64_t dropped = 0;
  uint64_t duplicated = 0;
  uint64_t delivered = 0;
};

// Deterministic stepped transport. All state changes happen through calls on
// one thread; the only clock is the simulated one advanced by Step().
class Fabric {
 public:
  using TraceHook = std::function<void(const Delivery&)>;

  // Throws Error(kSelfLink) for a == b, Error(kDuplicateLink) if an open link
  // already joins the pair.
  LinkId Connect(const SiteAddress& a, const SiteAddress& b,
                 const LinkPolicy& policy);
  // Discards frames still in flight on the link.
  void Close(LinkId link);
  bool IsOpen(LinkId link) const;
  std::optional<LinkId> Find(const SiteAddress& a, const SiteAddress& b) const;
  std::pair<SiteAddress, SiteAddress> Endpoints(LinkId link) const;

  // Returns false when the sending direction is partitioned; nothing is then
  // enqueued. Otherwise the frame is subject to loss, latency and
  // duplication. Throws Error(kLinkClosed) or Error(kUnknownLink).
  bool Send(LinkId link, const SiteAddress& from, std::string frame);

  // Advances the clock and returns every delivery now due, ordered by
  // (due time, link, send sequence).
  std::vector<Delivery> Step(int64_t advance_ms);

  int64_t now_ms() const { return now_ms_; }
  std::optional<int64_t> NextDueMs() const;
  size_t in_flight() const { return queue_.size(); }

  void SetPartitioned(LinkId link, bool partitioned);
  void SetPartitioned(LinkId link, const SiteAddress& from, bool partitioned);
  // Replaces the policy for one direction; the RNG stream is kept.
  void SetPolicy(LinkId link, const SiteAddress& from, const LinkPolicy& policy);
  const LinkPolicy& Policy(LinkId link, const SiteAddress& from) const;

  void set_trace_hook(TraceHook hook) { trace_hook_ = std::move(hook); }
  const FabricStats& stats() const { return stats_; }

 private:
  struct Direction {
    LinkPolicy policy;
    std::mt19937_64 rng;
  };
  struct Link {
    SiteAddress a;
    SiteAddress b;
    bool open = true;
    Direction dirs[2];
  };
  struct QueueKey {
    int64_t due_ms;
    uint32_t link;
    uint64_t seq;
    auto operator<=>(const QueueKey&) const = default;
  };
  struct InFlight {
    SiteAddress from;
    SiteAddress to;
    std::string frame;
  };

  Link& GetLink(LinkId link);
  const Link& GetLink(LinkId link) const;
  int DirectionOf(const Link& link, const SiteAddress& from) const;
  int64_t DrawLatency(Direction& dir);

  std::vector<Link> links_;
  std::map<std::pair<SiteAddress, SiteAddress>, LinkId> open_pairs_;
  std::map<QueueKey, InFlight> queue_;
  int64_t now_ms_ = 0;
  uint64_t next_seq_ = 0;
  FabricStats stats_;
  TraceHook trace_hook_;
};

}  // namespace fedbridge::netsim

#endif  // FEDBRIDGE_NETSIM_FABRIC_H_
