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

#include "trajloop/log.hpp"

#include <mutex>

namespace trajloop {

namespace {
std::mutex g_mu;
std::ostream* g_sink = nullptr;
}  // namespace

void set_log_sink(std::ostream* sink) {
  std::lock_guard lock(g_mu);
  g_sink = sink;
}

void log_event(const nlohmann::ordered_json& event) {
  std::lock_guard lock(g_mu);
  if (g_sink) *g_sink << event.dump() << '\n' << std::flush;
}

}  // namespace trajloop
