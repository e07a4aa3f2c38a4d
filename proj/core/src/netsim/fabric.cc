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

#include "fedbridge/netsim/fabric.h"

#include <cmath>

#include "fedbridge/error.h"

namespace fedbridge::netsim {
namespace {

uint64_t Mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::pair<SiteAddress, SiteAddress> Ordered(const SiteAddress& a,
                                            const SiteAddress& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

}  // namespace

void LinkPolicy::Validate() const {
  auto is_prob = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
  if (!is_prob(drop_prob)) {
    throw Error(ErrorCode::kInvalidConfig, "drop_prob must be in [0,1]");
  }
  if (!is_prob(dup_prob)) {
    throw Error(ErrorCode::kInvalidConfig, "dup_prob must be in [0,1]");
  }
  if (latency_min_ms < 0 || latency_max_ms < latency_min_ms) {
    throw Error(ErrorCode::kInvalidConfig,
                "latency must satisfy 0 <= min <= max");
  }
}

uint64_t DirectionSeed(uint64_t seed, int direction) {
  return Mix(seed ^ (static_cast<uint64_t>(direction + 1) * 0xd1b54a32d192ed03ULL));
}

double UniformFromDraw(uint64_t draw) {
  return static_cast<double>(draw >> 11) * 0x1.0p-53;
}

LinkId Fabric::Connect(const SiteAddress& a, const SiteAddress& b,
                       const LinkPolicy& policy) {
  if (a == b) {
    throw Error(ErrorCode::kSelfLink, "cannot link " + a.ToString() + " to itself");
  }
  policy.Validate();
  auto key = Ordered(a, b);
  if (open_pairs_.contains(key)) {
    throw Error(ErrorCode::kDuplicateLink,
                a.ToString() + " <-> " + b.ToString());
  }
  LinkId id{static_cast<uint32_t>(links_.size())};
  Link link;
  link.a = a;
  link.b = b;
  for (int d = 0; d < 2; ++d) {
    link.dirs[d].policy = policy;
    link.dirs[d].rng.seed(DirectionSeed(policy.seed, d));
  }
  links_.push_back(std::move(link));
  open_pairs_.emplace(key, id);
  return id;
}

Fabric::Link& Fabric::GetLink(LinkId link) {
  if (link.value >= links_.size()) {
    throw Error(ErrorCode::kUnknownLink, std::to_string(link.value));
  }
  return links_[link.value];
}

const Fabric::Link& Fabric::GetLink(LinkId link) const {
  if (link.value >= links_.size()) {
    throw Error(ErrorCode::kUnknownLink, std::to_string(link.value));
  }
  return links_[link.value];
}

int Fabric::DirectionOf(const Link& link, const SiteAddress& from) const {
  if (from == link.a) return 0;
  if (from == link.b) return 1;
  throw Error(ErrorCode::kUnknownLink,
              from.ToString() + " is not an endpoint of this link");
}

void Fabric::Close(LinkId id) {
  Link& link = GetLink(id);
  if (!link.open) return;
  link.open = false;
  open_pairs_.erase(Ordered(link.a, link.b));
  std::erase_if(queue_, [&](const auto& item) { return item.first.link == id.value; });
}

bool Fabric::IsOpen(LinkId id) const {
  return id.value < links_.size() && links_[id.value].open;
}

std::optional<LinkId> Fabric::Find(const SiteAddress& a,
                                   const SiteAddress& b) const {
  auto it = open_pairs_.find(Ordered(a, b));
  if (it == open_pairs_.end()) return std::nullopt;
  return it->second;
}

std::pair<SiteAddress, SiteAddress> Fabric::Endpoints(LinkId id) const {
  const Link& link = GetLink(id);
  return {link.a, link.b};
}

int64_t Fabric::DrawLatency(Direction& dir) {
  const auto& p = dir.policy;
  uint64_t span = static_cast<uint64_t>(p.latency_max_ms - p.latency_min_ms) + 1;
  return p.latency_min_ms + static_cast<int64_t>(dir.rng() % span);
}

bool Fabric::Send(LinkId id, const SiteAddress& from, std::string frame) {
  Link& link = GetLink(id);
  if (!link.open) {
    throw Error(ErrorCode::kLinkClosed, link.a.ToString() + " <-> " + link.b.ToString());
  }
  int d = DirectionOf(link, from);
  Direction& dir = link.dirs[d];
  if (dir.policy.partitioned) {
    ++stats_.refused;
    return false;
  }
  ++stats_.accepted;
  const SiteAddress& to = d == 0 ? link.b : link.a;

  bool drop = UniformFromDraw(dir.rng()) < dir.policy.drop_prob;
  int64_t latency = DrawLatency(dir);
  bool dup = UniformFromDraw(dir.rng()) < dir.policy.dup_prob && !drop;
  int64_t dup_latency = DrawLatency(dir);

  if (drop) {
    ++stats_.dropped;
    return true;
  }
  if (dup) {
    ++stats_.duplicated;
    queue_.emplace(QueueKey{now_ms_ + latency, id.value, next_seq_++},
                   InFlight{from, to, frame});
    queue_.emplace(QueueKey{now_ms_ + dup_latency, id.value, next_seq_++},
                   InFlight{from, to, std::move(frame)});
  } else {
    queue_.emplace(QueueKey{now_ms_ + latency, id.value, next_seq_++},
                   InFlight{from, to, std::move(frame)});
  }
  return true;
}

std::vector<Delivery> Fabric::Step(int64_t advance_ms) {
  if (advance_ms < 0) {
    throw Error(ErrorCode::kInvalidConfig, "advance_ms must be >= 0");
  }
  now_ms_ += advance_ms;
  std::vector<Delivery> due;
  while (!queue_.empty() && queue_.begin()->first.due_ms <= now_ms_) {
    auto node = queue_.extract(queue_.begin());
    Delivery d{node.key().due_ms, LinkId{node.key().link}, node.key().seq,
               std::move(node.mapped().from), std::move(node.mapped().to),
               std::move(node.mapped().frame)};
    ++stats_.delivered;
    if (trace_hook_) trace_hook_(d);
    due.push_back(std::move(d));
  }
  return due;
}

std::optional<int64_t> Fabric::NextDueMs() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.begin()->first.due_ms;
}

void Fabric::SetPartitioned(LinkId id, bool partitioned) {
  Link& link = GetLink(id);
  link.dirs[0].policy.partitioned = partitioned;
  link.dirs[1].policy.partitioned = partitioned;
}

void Fabric::SetPartitioned(LinkId id, const SiteAddress& from, bool partitioned) {
  Link& link = GetLink(id);
  link.dirs[DirectionOf(link, from)].policy.partitioned = partitioned;
}

void Fabric::SetPolicy(LinkId id, const SiteAddress& from,
                       const LinkPolicy& policy) {
  policy.Validate();
  Link& link = GetLink(id);
  link.dirs[DirectionOf(link, from)].policy = policy;
}

const LinkPolicy& Fabric::Policy(LinkId id, const SiteAddress& from) const {
  const Link& link = GetLink(id);
  return link.dirs[DirectionOf(link, from)].policy;
}

}  // namespace fedbridge::netsim
