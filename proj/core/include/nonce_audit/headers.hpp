#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nonce_audit {

// HTTP header list preserving duplicates and arrival order.
using HeaderList = std::vector<std::pair<std::string, std::string>>;

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);

// All values for a header name, case-insensitive, in arrival order.
std::vector<std::string> header_values(const HeaderList& headers, std::string_view name);
bool has_header(const HeaderList& headers, std::string_view name);

}  // namespace nonce_audit
