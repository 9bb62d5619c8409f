#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace icr::cli {

/// Parses "3", "0-9", "1,4,7-9" into an ordered list without duplicates.
std::vector<std::uint64_t> parse_seeds(std::string_view list);

}  // namespace icr::cli
