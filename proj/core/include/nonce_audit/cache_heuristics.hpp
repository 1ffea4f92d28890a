#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nonce_audit/headers.hpp"

namespace nonce_audit {

enum class CacheStatus { Hit, Miss, Unknown };
enum class CacheRule { KnownHeader, GenericCacheKeyword, AgeHeader };

struct CacheVerdict {
    CacheStatus status = CacheStatus::Unknown;
    std::optional<std::pair<std::string, std::string>> evidence;  // header name, value
    std::optional<CacheRule> rule;
};

struct CatalogEntry {
    std::string header;  // lowercase
    std::string token;   // uppercase
    CacheStatus verdict = CacheStatus::Unknown;
};

// Cache-status header rules. One rule per line in the file form:
//   <header-name> <TOKEN>=<Hit|Miss>
// with '#' comments.
class HeaderCatalog {
  public:
    static HeaderCatalog builtin();
    static std::optional<HeaderCatalog> load(const std::filesystem::path& file);

    std::vector<CatalogEntry> entries;

    bool knows_header(std::string_view name) const;
};

// Wire-order, first-match classification: known catalog headers, then any
// header named *cache* carrying a HIT/MISS token, then Age > 0.
CacheVerdict classify_response(const HeaderList& headers);
CacheVerdict classify_response(const HeaderList& headers, const HeaderCatalog& catalog);

}  // namespace nonce_audit
