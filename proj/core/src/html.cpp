#include "nonce_audit/html.hpp"

#include <cctype>
#include <unordered_set>

#include "nonce_audit/headers.hpp"
#include "nonce_audit/url.hpp"

namespace nonce_audit {

const std::string* Tag::attr(std::string_view name) const {
    for (const auto& a : attrs) {
        if (a.name == name && a.has_value) return &a.value;
    }
    return nullptr;
}

namespace {

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == ':' || c == '_';
}

// Find "</name" case-insensitively starting at pos.
size_t find_close_tag(std::string_view html, std::string_view name, size_t pos) {
    while (pos + name.size() + 2 <= html.size()) {
        auto lt = html.find('<', pos);
        if (lt == std::string_view::npos) return std::string_view::npos;
        if (lt + 1 < html.size() && html[lt + 1] == '/' &&
            iequals(html.substr(lt + 2, name.size()), name)) {
            return lt;
        }
        pos = lt + 1;
    }
    return std::string_view::npos;
}

}  // namespace

std::vector<Tag> scan_tags(std::string_view html) {
    std::vector<Tag> tags;
    size_t i = 0;
    while (i < html.size()) {
        if (html[i] != '<') {
            i++;
            continue;
        }
        if (html.substr(i, 4) == "<!--") {
            auto end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        if (i + 1 >= html.size()) break;
        char c = html[i + 1];
        if (c == '/' || c == '!' || c == '?') {
            auto end = html.find('>', i);
            i = end == std::string_view::npos ? html.size() : end + 1;
            continue;
        }
        if (!std::isalpha(static_cast<unsigned char>(c))) {
            i++;
            continue;
        }

        Tag tag;
        size_t j = i + 1;
        while (j < html.size() && is_name_char(html[j])) j++;
        tag.name = to_lower(html.substr(i + 1, j - i - 1));

        // attributes
        bool self_closing = false;
        while (j < html.size() && html[j] != '>') {
            if (std::isspace(static_cast<unsigned char>(html[j]))) {
                j++;
                continue;
            }
            if (html[j] == '/') {
                self_closing = true;
                j++;
                continue;
            }
            size_t name_start = j;
            while (j < html.size() && html[j] != '=' && html[j] != '>' && html[j] != '/' &&
                   !std::isspace(static_cast<unsigned char>(html[j])))
                j++;
            if (j == name_start) {
                j++;
                continue;
            }
            TagAttr attr;
            attr.name = to_lower(html.substr(name_start, j - name_start));
            while (j < html.size() && std::isspace(static_cast<unsigned char>(html[j]))) j++;
            if (j < html.size() && html[j] == '=') {
                j++;
                while (j < html.size() && std::isspace(static_cast<unsigned char>(html[j]))) j++;
                attr.has_value = true;
                if (j < html.size() && (html[j] == '"' || html[j] == '\'')) {
                    char quote = html[j++];
                    size_t vstart = j;
                    while (j < html.size() && html[j] != quote) j++;
                    attr.value = std::string(html.substr(vstart, j - vstart));
                    if (j < html.size()) j++;
                } else {
                    size_t vstart = j;
                    while (j < html.size() && html[j] != '>' &&
                           !std::isspace(static_cast<unsigned char>(html[j])))
                        j++;
                    attr.value = std::string(html.substr(vstart, j - vstart));
                }
            }
            tag.attrs.push_back(std::move(attr));
        }
        if (j < html.size()) j++;  // consume '>'
        i = j;

        // script/style raw text can contain '<' that is not markup
        if (!self_closing && (tag.name == "script" || tag.name == "style")) {
            auto close = find_close_tag(html, tag.name, i);
            i = close == std::string_view::npos ? html.size() : close;
        }
        tags.push_back(std::move(tag));
    }
    return tags;
}

std::vector<std::string> extract_links(const std::string& html, const std::string& base_url) {
    std::vector<std::string> links;
    auto base = parse_url(base_url);
    if (!base) return links;
    std::unordered_set<std::string> seen;
    for (const auto& tag : scan_tags(html)) {
        if (tag.name != "a") continue;
        const std::string* href = tag.attr("href");
        if (!href || href->empty()) continue;
        auto resolved = resolve_url(*href, *base);
        if (!resolved) continue;
        auto normalized = normalize_url(*resolved);
        if (!normalized) continue;
        if (seen.insert(*normalized).second) links.push_back(*normalized);
    }
    return links;
}

}  // namespace nonce_audit
