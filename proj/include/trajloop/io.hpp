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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trajloop {

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary file and rename so readers never see half a file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace trajloop
