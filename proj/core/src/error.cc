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

#include "fedbridge/error.h"

namespace fedbridge {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFrameTooLarge: return "FrameTooLarge";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kMalformed: return "Malformed";
    case ErrorCode::kInvalidEnvelope: return "InvalidEnvelope";
    case ErrorCode::kSelfLink: return "SelfLink";
    case ErrorCode::kDuplicateLink: return "DuplicateLink";
    case ErrorCode::kLinkClosed: return "LinkClosed";
    case ErrorCode::kUnknownLink: return "UnknownLink";
    case ErrorCode::kDuplicateJobId: return "DuplicateJobId";
    case ErrorCode::kUnknownApp: return "UnknownApp";
    case ErrorCode::kNeverSchedulable: return "NeverSchedulable";
    case ErrorCode::kDirectNotPermitted: return "DirectNotPermitted";
    case ErrorCode::kUnknownJob: return "UnknownJob";
    case ErrorCode::kNotAMember: return "NotAMember";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kStepOrder: return "StepOrder";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace fedbridge
