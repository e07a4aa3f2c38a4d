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

#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fedbridge/error.h"
#include "fedbridge/wire/base64.h"
#include "fedbridge/wire/codec.h"
#include "fedbridge/wire/envelope.h"
#include "wire_oracle.h"

namespace fedbridge::wire {
namespace {

ErrorCode CodeOf(std::string_view frame) {
  try {
    DecodeEnvelope(frame);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "frame was accepted";
  return ErrorCode::kIo;
}

TEST(WireTest, ReferenceFrameMatchesIndependentEncoder) {
  Envelope env = testing_oracle::ReferenceEnvelope();
  std::string frame = EncodeEnvelope(env);
  EXPECT_EQ(frame, testing_oracle::HandEncode(env));
  // Frozen bytes, produced once by the hand encoder.
  EXPECT_EQ(frame, testing_oracle::ReferenceFrame());
  EXPECT_EQ(frame.size(), 4u + 258u);
  EXPECT_EQ(frame.substr(0, 4), std::string("\x00\x00\x01\x02", 4));
}

TEST(WireTest, EmptyPayloadHeartbeat) {
  Envelope env;
  env.msg_id = MsgId(1, 2);
  env.src = SiteAddress::Control("site1");
  env.dst = SiteAddress::Server();
  env.kind = MessageKind::kHeartbeat;
  std::string frame = EncodeEnvelope(env);
  std::string body = frame.substr(4);
  EXPECT_NE(body.find("\"payload_b64\":\"\""), std::string::npos);
  uint32_t prefix = (uint8_t(frame[0]) << 24) | (uint8_t(frame[1]) << 16) |
                    (uint8_t(frame[2]) << 8) | uint8_t(frame[3]);
  EXPECT_EQ(prefix, body.size());
  EXPECT_EQ(DecodeEnvelope(frame), env);
}

TEST(WireTest, RoundTripProperty) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 500; ++i) {
    Envelope env = testing_oracle::RandomEnvelope(rng);
    std::string frame = EncodeEnvelope(env);
    ASSERT_EQ(DecodeEnvelope(frame), env) << frame;
    EXPECT_EQ(EncodeEnvelope(env), frame);  // pure and deterministic
    EXPECT_EQ(frame, testing_oracle::HandEncode(env));
  }
}

TEST(WireTest, ConcatenatedFramesAreSelfDelimiting) {
  std::mt19937_64 rng(7);
  std::vector<Envelope> sent;
  std::string stream;
  for (int i = 0; i < 25; ++i) {
    sent.push_back(testing_oracle::RandomEnvelope(rng));
    stream += EncodeEnvelope(sent.back());
  }
  // Feed in odd-sized chunks to exercise partial reads.
  FrameReader reader;
  std::vector<Envelope> got;
  for (size_t pos = 0; pos < stream.size(); pos += 37) {
    reader.Append(std::string_view(stream).substr(pos, 37));
    while (auto body = reader.NextBody()) got.push_back(DecodeEnvelopeBody(*body));
  }
  EXPECT_EQ(got, sent);
  EXPECT_EQ(reader.buffered(), 0u);
}

TEST(WireTest, ShortInputsAreTruncated) {
  EXPECT_EQ(CodeOf(std::string("\x00\x00\x01", 3)), ErrorCode::kTruncated);
  EXPECT_EQ(CodeOf(""), ErrorCode::kTruncated);
  std::string frame = testing_oracle::ReferenceFrame();
  EXPECT_EQ(CodeOf(frame.substr(0, frame.size() - 1)), ErrorCode::kTruncated);
}

TEST(WireTest, OversizeDeclaredLength) {
  std::string frame("\x04\x00\x00\x00{}", 6);
  EXPECT_EQ(CodeOf(frame), ErrorCode::kFrameTooLarge);
  FrameReader reader;
  reader.Append(frame);
  EXPECT_THROW(reader.NextBody(), Error);
}

TEST(WireTest, EncodeRejectsOversizePayload) {
  Envelope env = testing_oracle::ReferenceEnvelope();
  env.payload.assign(kMaxFrameBytes, 'x');
  try {
    EncodeEnvelope(env);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFrameTooLarge);
  }
}

TEST(WireTest, EncodeRejectsInvariantViolations) {
  Envelope env = testing_oracle::ReferenceEnvelope();
  env.kind = MessageKind::kQuery;  // zero correlation
  EXPECT_THROW(EncodeEnvelope(env), Error);
  env = testing_oracle::ReferenceEnvelope();
  env.job_id.clear();  // GUEST_FWD needs a job
  EXPECT_THROW(EncodeEnvelope(env), Error);
  env = testing_oracle::ReferenceEnvelope();
  env.src.site = "Site1";
  EXPECT_THROW(EncodeEnvelope(env), Error);
  env = testing_oracle::ReferenceEnvelope();
  env.job_id = std::string(65, 'j');
  EXPECT_THROW(EncodeEnvelope(env), Error);
  env = testing_oracle::ReferenceEnvelope();
  env.job_id = std::string("\xff\xfe", 2);
  EXPECT_THROW(EncodeEnvelope(env), Error);
}

TEST(WireTest, EverySingleFieldCorruptionIsRejected) {
  const std::string reference = testing_oracle::ReferenceFrame();
  std::vector<std::string> corruptions = testing_oracle::SingleFieldCorruptions(reference);
  ASSERT_GE(corruptions.size(), 40u);
  for (const auto& frame : corruptions) {
    ErrorCode code = CodeOf(frame);
    EXPECT_TRUE(code == ErrorCode::kMalformed || code == ErrorCode::kTruncated)
        << frame.substr(4);
  }
}

TEST(WireTest, BogusKindIsMalformed) {
  std::string body = testing_oracle::ReferenceFrame().substr(4);
  auto pos = body.find("GUEST_FWD");
  body.replace(pos, 9, "BOGUS");
  EXPECT_EQ(CodeOf(FrameBody(body)), ErrorCode::kMalformed);
}

TEST(Base64Test, StrictDecoding) {
  EXPECT_EQ(Base64Decode("AAFoZWxsb/8="), std::string("\x00\x01hello\xff", 8));
  EXPECT_EQ(Base64Decode(""), std::string());
  EXPECT_FALSE(Base64Decode("AAA"));
  EXPECT_FALSE(Base64Decode("AB=="));  // nonzero trailing bits
  EXPECT_FALSE(Base64Decode("A=AA"));
  EXPECT_FALSE(Base64Decode("AA AA=="));
  EXPECT_FALSE(Base64Decode("AA\nA"));
  EXPECT_FALSE(Base64Decode("QQ-_"));
  std::mt19937_64 rng(3);
  for (int n = 0; n < 64; ++n) {
    std::string bytes(n, '\0');
    for (auto& c : bytes) c = static_cast<char>(rng());
    std::string text = Base64Encode(bytes);
    EXPECT_EQ(text, testing_oracle::HandBase64(bytes));
    EXPECT_EQ(Base64Decode(text), bytes);
  }
}

TEST(MsgIdTest, HexIsCanonicalLowercase) {
  MsgId id(0x0123456789abcdefULL, 0xfedcba9876543210ULL);
  EXPECT_EQ(id.ToHex(), "0123456789abcdeffedcba9876543210");
  EXPECT_EQ(MsgId::FromHex(id.ToHex()), id);
  EXPECT_FALSE(MsgId::FromHex("0123456789ABCDEFfedcba9876543210"));
  EXPECT_FALSE(MsgId::FromHex("0123"));
}

TEST(MsgIdTest, GeneratorIssuesDistinctNonzeroIds) {
  MsgIdGenerator gen(0);
  std::set<MsgId> seen;
  for (int i = 0; i < 1000; ++i) {
    MsgId id = gen.Next();
    EXPECT_FALSE(id.IsZero());
    EXPECT_TRUE(seen.insert(id).second);
  }
}

TEST(SiteAddressTest, Names) {
  EXPECT_TRUE(IsValidSiteName("site_1-a"));
  EXPECT_FALSE(IsValidSiteName(""));
  EXPECT_FALSE(IsValidSiteName("Site"));
  EXPECT_FALSE(IsValidSiteName(std::string(33, 'a')));
  EXPECT_EQ((SiteAddress{"site1", "j1"}).ToString(), "site1/j1");
  EXPECT_EQ(SiteAddress::Server().ToString(), "server");
}

}  // namespace
}  // namespace fedbridge::wire
