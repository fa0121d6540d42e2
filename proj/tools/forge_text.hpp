#pragma once

#include <string>
#include <vector>

#include "pvea/forge.hpp"

namespace pvea::cli {

/// Line-based forge description; see README for the grammar. Throws
/// InvalidArgument with the offending line number.
ForgeSpec parse_forge_text(const std::string& text);

/// One line per site: offset, length, kind, picture, slice, macroblock, block.
std::string format_site_list(const std::vector<FlcSite>& sites);

}  // namespace pvea::cli
