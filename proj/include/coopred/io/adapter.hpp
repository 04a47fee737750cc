#pragma once

#include <string>
#include <vector>

#include "coopred/scene.hpp"

namespace coopred {

/// Maps one record of the documented external cooperative-trajectory schema
/// (see README, "External record schema") into a Scene. The infrastructure
/// view is optional; agent types outside the known set map to the nearest
/// enum and append a note to `warnings`. Missing mandatory fields raise
/// std::runtime_error.
Scene adapt_external(const std::string& json_text, std::vector<std::string>* warnings = nullptr);

}  // namespace coopred
