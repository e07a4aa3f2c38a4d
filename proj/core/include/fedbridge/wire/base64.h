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

#ifndef FEDBRIDGE_WIRE_BASE64_H_
#define FEDBRIDGE_WIRE_BASE64_H_

#include <optional>
#include <string>
#include <string_view>

namespace fedbridge::wire {

// Standard alphabet, padded.
std::string Base64Encode(std::string_view bytes);
// Rejects anything that is not the canonical padded encoding of some input.
std::optional<std::string> Base64Decode(std::string_view text);

}  // namespace fedbridge::wire

#endif  // FEDBRIDGE_WIRE_BASE64_H_
