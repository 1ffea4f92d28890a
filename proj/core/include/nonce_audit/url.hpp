#pragma once

#include <optional>
#include <string>

namespace nonce_audit {

struct Url {
    std::string scheme;    // lowercase
    std::string host;      // lowercase
    int port = -1;         // -1 when not given explicitly
    std::string path;      // verbatim, "/" when empty with authority
    std::string query;     // without '?', verbatim
    std::string fragment;  // without '#'

    int effective_port() const;
    bool has_default_port() const;
    std::string to_string() const;
};

std::optional<Url> parse_url(std::string_view text);

// Lowercase scheme/host, strip default ports and the fragment; the query
// string participates in cache keys and is kept verbatim.
std::optional<std::string> normalize_url(const std::string& url);

// Resolve an href (possibly relative) against a base URL.
std::optional<std::string> resolve_url(const std::string& href, const Url& base);

// True iff the URL's host is the registrable domain itself or a subdomain
// of it (dot-boundary suffix match, case-insensitive).
bool is_internal(const std::string& url, const std::string& registrable_domain);

}  // namespace nonce_audit
