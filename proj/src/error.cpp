// Copyright 2026 The cmosq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmosq/error.hpp"

namespace cmosq {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownOpcode: return "UnknownOpcode";
    case ErrorCode::kAddressOutOfRange: return "AddressOutOfRange";
    case ErrorCode::kPayloadOutOfRange: return "PayloadOutOfRange";
    case ErrorCode::kIllegalTransition: return "IllegalTransition";
    case ErrorCode::kOscillatorDisabled: return "OscillatorDisabled";
    case ErrorCode::kNonPhysicalState: return "NonPhysicalState";
    case ErrorCode::kInvalidSchedule: return "InvalidSchedule";
    case ErrorCode::kFitDiverged: return "FitDiverged";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kInsufficientDecay: return "InsufficientDecay";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
  }
  return "Error";
}

}  // namespace cmosq
