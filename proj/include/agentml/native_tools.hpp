#pragma once

#include "agentml/toolspec.hpp"

namespace agentml {

// Registers the in-process analysis tools: tabular exploration, feature
// ranking, model training and inference, and volumetric feature extraction.
void register_native_tools(ToolRegistry& registry);

}  // namespace agentml
