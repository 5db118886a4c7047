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

// Client for OpenAI-compatible /completions endpoints.

#pragma once

#include <string>

#include "trajloop/backend.hpp"

namespace trajloop {

struct HttpBackendConfig {
  std::string base_url;                 // e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key_env = "TRAJLOOP_API_KEY";
  double timeout_seconds = 60.0;        // per attempt
  int max_tries = 5;
  double backoff_base_seconds = 1.0;    // wait before retry n is base * 2^(n-1)
};

/// POSTs {model, prompt, max_tokens, temperature, stop} and returns
/// choices[0].text. 429, 5xx and transport failures are retried with
/// exponential backoff; the call never takes longer than
/// timeout_seconds * max_tries. Failures raise BackendError carrying the
/// attempt count.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string name() const override { return "http"; }
  std::string complete(const CompletionRequest& request) override;

 private:
  HttpBackendConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // prefix before /completions
};

}  // namespace trajloop
