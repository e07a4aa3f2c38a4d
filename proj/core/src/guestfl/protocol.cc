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

#include "fedbridge/guestfl/protocol.h"

#include <cmath>

#include <nlohmann/json.hpp>

#include "fedbridge/error.h"

namespace fedbridge::guestfl {
namespace {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

std::string_view OpName(Op op) { return op == Op::kFit ? "fit" : "evaluate"; }

Op ParseOp(const json& j) {
  std::string s = j.at("op").get<std::string>();
  if (s == "fit") return Op::kFit;
  if (s == "evaluate") return Op::kEvaluate;
  throw Error(ErrorCode::kMalformed, "unknown op '" + s + "'");
}

std::vector<double> ParseWeights(const json& j) {
  const json& arr = j.at("weights");
  if (!arr.is_array()) throw Error(ErrorCode::kMalformed, "weights must be an array");
  std::vector<double> w;
  w.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw Error(ErrorCode::kMalformed, "weights must be numbers");
    w.push_back(v.get<double>());
  }
  CheckFinite(w, "weights");
  return w;
}

std::map<std::string, double> ParseMetrics(const json& j) {
  std::map<std::string, double> out;
  if (!j.contains("metrics")) return out;
  for (const auto& [k, v] : j["metrics"].items()) {
    if (!v.is_number()) throw Error(ErrorCode::kMalformed, "metric " + k);
    out[k] = v.get<double>();
  }
  return out;
}

json Parse(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kMalformed, "guest message is not a JSON object");
  }
  return j;
}

template <typename Fn>
auto Guarded(Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, e.what());
  }
}

}  // namespace

std::string EncodeNodeMessage(const NodeMessage& m) {
  ordered_json j;
  switch (m.type) {
    case NodeMessage::Type::kPull:
      j["type"] = "pull";
      j["node"] = m.node;
      break;
    case NodeMessage::Type::kPush:
      j["type"] = "push";
      j["node"] = m.node;
      j["round"] = m.round;
      j["op"] = OpName(m.op);
      if (m.op == Op::kFit) {
        j["weights"] = m.fit.weights.weights;
        j["num_examples"] = m.fit.num_examples;
        j["metrics"] = m.fit.metrics;
      } else {
        j["loss"] = m.eval.loss;
        j["num_examples"] = m.eval.num_examples;
        j["metrics"] = m.eval.metrics;
      }
      break;
    case NodeMessage::Type::kFault:
      j["type"] = "fault";
      j["node"] = m.node;
      j["reason"] = m.reason;
      break;
  }
  return j.dump();
}

NodeMessage DecodeNodeMessage(std::string_view body) {
  json j = Parse(body);
  return Guarded([&] {
    NodeMessage m;
    std::string type = j.at("type").get<std::string>();
    m.node = j.at("node").get<std::string>();
    if (type == "pull") {
      m.type = NodeMessage::Type::kPull;
    } else if (type == "fault") {
      m.type = NodeMessage::Type::kFault;
      m.reason = j.at("reason").get<std::string>();
    } else if (type == "push") {
      m.type = NodeMessage::Type::kPush;
      m.round = j.at("round").get<int>();
      m.op = ParseOp(j);
      if (m.op == Op::kFit) {
        m.fit.weights.weights = ParseWeights(j);
        m.fit.weights.version = m.round;
        m.fit.num_examples = j.at("num_examples").get<int64_t>();
        m.fit.metrics = ParseMetrics(j);
        if (m.fit.num_examples < 1) throw Error(ErrorCode::kMalformed, "num_examples");
      } else {
        m.eval.loss = j.at("loss").get<double>();
        m.eval.num_examples = j.at("num_examples").get<int64_t>();
        m.eval.metrics = ParseMetrics(j);
        if (m.eval.num_examples < 1 || !std::isfinite(m.eval.loss) ||
            !m.eval.metrics.count("accuracy")) {
          throw Error(ErrorCode::kMalformed, "evaluate result");
        }
      }
    } else {
      throw Error(ErrorCode::kMalformed, "unknown node message type '" + type + "'");
    }
    return m;
  });
}

std::string EncodeLinkMessage(const LinkMessage& m) {
  ordered_json j;
  switch (m.type) {
    case LinkMessage::Type::kTask:
      j["type"] = "task";
      j["round"] = m.round;
      j["op"] = OpName(m.op);
      j["weights"] = m.weights;
      break;
    case LinkMessage::Type::kWait: j["type"] = "wait"; break;
    case LinkMessage::Type::kAck: j["type"] = "ack"; break;
    case LinkMessage::Type::kDone: j["type"] = "done"; break;
    case LinkMessage::Type::kError:
      j["type"] = "error";
      j["reason"] = m.reason;
      break;
  }
  return j.dump();
}

LinkMessage DecodeLinkMessage(std::string_view body) {
  json j = Parse(body);
  return Guarded([&] {
    LinkMessage m;
    std::string type = j.at("type").get<std::string>();
    if (type == "task") {
      m.type = LinkMessage::Type::kTask;
      m.round = j.at("round").get<int>();
      m.op = ParseOp(j);
      m.weights = ParseWeights(j);
    } else if (type == "wait") {
      m.type = LinkMessage::Type::kWait;
    } else if (type == "ack") {
      m.type = LinkMessage::Type::kAck;
    } else if (type == "done") {
      m.type = LinkMessage::Type::kDone;
    } else if (type == "error") {
      m.type = LinkMessage::Type::kError;
      m.reason = j.at("reason").get<std::string>();
    } else {
      throw Error(ErrorCode::kMalformed, "unknown link message type '" + type + "'");
    }
    return m;
  });
}

std::string HistoryToJson(const History& history) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : history) {
    ordered_json e;
    e["round"] = r.round;
    e["loss"] = r.loss;
    e["accuracy"] = r.accuracy;
    arr.push_back(std::move(e));
  }
  return arr.dump(2) + "\n";
}

History HistoryFromJson(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw Error(ErrorCode::kMalformed, "history");
  return Guarded([&] {
    History h;
    for (const auto& e : j) {
      h.push_back({e.at("round").get<int>(), e.at("loss").get<double>(),
                   e.at("accuracy").get<double>()});
    }
    return h;
  });
}

}  // namespace fedbridge::guestfl
