#include "icr_cli/seeds.hpp"

#include <charconv>
#include <set>
#include <string>

#include "icr/error.hpp"

namespace icr::cli {
namespace {

std::uint64_t parse_one(std::string_view s, std::string_view whole) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
    throw InvalidArgument("bad seed list '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(std::string_view list) {
  std::vector<std::uint64_t> out;
  std::set<std::uint64_t> seen;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto item = list.substr(pos, comma == std::string_view::npos ? list.size() - pos : comma - pos);
    const auto dash = item.find('-');
    std::uint64_t lo = 0, hi = 0;
    if (dash == std::string_view::npos) {
      lo = hi = parse_one(item, list);
    } else {
      lo = parse_one(item.substr(0, dash), list);
      hi = parse_one(item.substr(dash + 1), list);
      if (hi < lo) throw InvalidArgument("bad seed range '" + std::string(item) + "'");
    }
    for (auto s = lo;; ++s) {
      if (seen.insert(s).second) out.push_back(s);
      if (s == hi) break;
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace icr::cli
