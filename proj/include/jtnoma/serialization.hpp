/*
Copyright 2026 The jtnoma Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <json.hpp>

#include "jtnoma/channel.hpp"
#include "jtnoma/model.hpp"

namespace jtnoma {

inline constexpr const char* kInstanceSchema = "jtnoma-instance/1";

nlohmann::json config_to_json(const NetworkConfig& cfg);

// Overlays the keys present in `j` on `base`; counts given without per-index vectors
// broadcast the base's first entry. Throws InvalidConfigError on type errors or unknown keys.
NetworkConfig config_from_json(const nlohmann::json& j, NetworkConfig base);

nlohmann::json channel_to_json(const ChannelModelParams& ch);
ChannelModelParams channel_from_json(const nlohmann::json& j, ChannelModelParams base = {});

nlohmann::json instance_to_json_value(const NetworkInstance& inst);
NetworkInstance instance_from_json_value(const nlohmann::json& j);

} // namespace jtnoma
