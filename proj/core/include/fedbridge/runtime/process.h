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

#ifndef FEDBRIDGE_RUNTIME_PROCESS_H_
#define FEDBRIDGE_RUNTIME_PROCESS_H_

#include <cstdint>
#include <deque>
#include <string>

#include "fedbridge/net/actor.h"
#include "fedbridge/wire/envelope.h"

namespace fedbridge::runtime {

// The transport under the control processes: sim fabric links or sockets.
class LinkLayer {
 public:
  virtual ~LinkLayer() = default;
  // Sends on the link joining link endpoints `from` and `to`. False when no
  // such link exists or the transport refused the frame.
  virtual bool Send(const wire::SiteAddress& from, const wire::SiteAddress& to,
                    const wire::Envelope& env) = 0;
  virtual bool HasLink(const wire::SiteAddress& a, const wire::SiteAddress& b) const = 0;
  // Direct job links between two workers. False when unsupported.
  virtual bool OpenDirect(const std::string& job_id, const wire::SiteAddress& a,
                          const wire::SiteAddress& b) = 0;
  virtual void CloseDirect(const wire::SiteAddress& a, const wire::SiteAddress& b) = 0;
};

struct ProcessStats {
  uint64_t sent = 0;
  uint64_t refused = 0;
  uint64_t local = 0;
  uint64_t direct = 0;
  uint64_t relayed = 0;
  uint64_t relay_rejected = 0;
  uint64_t no_worker = 0;
  uint64_t isolation_drops = 0;
};

// A control process (SCP or CCP) and the workers it hosts.
class Process : public net::Actor {
 public:
  Process(std::string site, LinkLayer* links) : site_(std::move(site)), links_(links) {}

  // Every envelope arriving on one of this process's links.
  virtual void OnEnvelope(const wire::Envelope& env, int64_t now) = 0;

  const std::string& site() const { return site_; }
  const ProcessStats& stats() const { return stats_; }
  wire::SiteAddress control_address() const { return wire::SiteAddress::Control(site_); }

 protected:
  // Delivers locally, on a direct job link when one joins src and dst, or
  // otherwise on the control link toward env.dst.
  bool Route(const wire::Envelope& env);
  // Sends on the control link toward env.dst, never on a direct link.
  bool ForwardOnControl(const wire::Envelope& env);
  void DrainLocal(int64_t now);
  bool has_local() const { return !local_.empty(); }
  // Link endpoint pair used for non-direct traffic to `dst`.
  virtual std::pair<wire::SiteAddress, wire::SiteAddress> ControlHop(
      const wire::SiteAddress& dst) const = 0;

  std::string site_;
  LinkLayer* links_;
  ProcessStats stats_;

 private:
  std::deque<wire::Envelope> local_;
};

}  // namespace fedbridge::runtime

#endif  // FEDBRIDGE_RUNTIME_PROCESS_H_
