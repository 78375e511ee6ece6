#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kgdx {

/// Prompt templates and lexicons compiled in from assets/. Names are paths
/// relative to that directory, e.g. "prompts/hv_prompt.txt".
std::string_view asset(std::string_view name);
std::vector<std::string> asset_names();

}  // namespace kgdx
