#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nonce_audit {

struct TagAttr {
    std::string name;  // lowercase
    std::string value; // verbatim, no trimming
    bool has_value = false;
};

struct Tag {
    std::string name;  // lowercase
    std::vector<TagAttr> attrs;

    const std::string* attr(std::string_view name) const;
};

// Tolerant scanner over (possibly malformed) markup: yields open tags in
// document order, skipping comments and raw script/style text.
std::vector<Tag> scan_tags(std::string_view html);

// Anchor href targets resolved against base_url, fragments stripped,
// deduplicated after normalization, first-appearance order.
std::vector<std::string> extract_links(const std::string& html, const std::string& base_url);

}  // namespace nonce_audit
