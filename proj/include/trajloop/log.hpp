// Copyright 2026 The trajloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Structured progress lines (one JSON object per line) on a shared sink.

#pragma once

#include <ostream>

#include <json.hpp>

namespace trajloop {

/// nullptr silences logging (the default).
void set_log_sink(std::ostream* sink);
void log_event(const nlohmann::ordered_json& event);

}  // namespace trajloop
