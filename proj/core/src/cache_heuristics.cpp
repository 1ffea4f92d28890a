#include "nonce_audit/cache_heuristics.hpp"

#include <cctype>
#include <fstream>

namespace nonce_audit {

namespace {

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

// Word-bounded tokens: runs of alphanumerics, uppercased.
std::vector<std::string> value_tokens(std::string_view value) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < value.size()) {
        if (!std::isalnum(static_cast<unsigned char>(value[i]))) {
            i++;
            continue;
        }
        size_t start = i;
        while (i < value.size() && std::isalnum(static_cast<unsigned char>(value[i]))) i++;
        tokens.push_back(to_upper(value.substr(start, i - start)));
    }
    return tokens;
}

std::optional<long> parse_integer(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    long v = 0;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        v = v * 10 + (c - '0');
        if (v > 1'000'000'000L) return v;
    }
    return v;
}

}  // namespace

HeaderCatalog HeaderCatalog::builtin() {
    HeaderCatalog catalog;
    const char* headers[] = {"x-cache",   "x-cache-status", "cf-cache-status",
                             "cdn-cache", "x-proxy-cache",  "x-cache-lookup",
                             "cache-status"};
    const std::pair<const char*, CacheStatus> tokens[] = {
        {"HIT", CacheStatus::Hit},      {"MISS", CacheStatus::Miss},
        {"EXPIRED", CacheStatus::Miss}, {"BYPASS", CacheStatus::Miss},
        {"DYNAMIC", CacheStatus::Miss}, {"PASS", CacheStatus::Miss},
    };
    for (const char* h : headers) {
        for (const auto& [token, verdict] : tokens) {
            catalog.entries.push_back({h, token, verdict});
        }
    }
    return catalog;
}

std::optional<HeaderCatalog> HeaderCatalog::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) return std::nullopt;
    HeaderCatalog catalog;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string_view s = trim(line);
        if (s.empty()) continue;
        auto space = s.find_first_of(" \t");
        if (space == std::string_view::npos) return std::nullopt;
        std::string header = to_lower(s.substr(0, space));
        std::string_view rule = trim(s.substr(space));
        auto eq = rule.find('=');
        if (eq == std::string_view::npos) return std::nullopt;
        std::string token = to_upper(trim(rule.substr(0, eq)));
        std::string_view verdict_s = trim(rule.substr(eq + 1));
        CacheStatus verdict;
        if (iequals(verdict_s, "hit")) {
            verdict = CacheStatus::Hit;
        } else if (iequals(verdict_s, "miss")) {
            verdict = CacheStatus::Miss;
        } else {
            return std::nullopt;
        }
        catalog.entries.push_back({std::move(header), std::move(token), verdict});
    }
    return catalog;
}

bool HeaderCatalog::knows_header(std::string_view name) const {
    for (const auto& e : entries) {
        if (iequals(e.header, name)) return true;
    }
    return false;
}

CacheVerdict classify_response(const HeaderList& headers) {
    static const HeaderCatalog catalog = HeaderCatalog::builtin();
    return classify_response(headers, catalog);
}

CacheVerdict classify_response(const HeaderList& headers, const HeaderCatalog& catalog) {
    // (1) known cache-status headers
    for (const auto& [name, value] : headers) {
        if (iequals(name, "x-cache-hits")) {
            // hit counter: any positive count means a cache served it
            auto n = parse_integer(value);
            if (n && *n > 0)
                return {CacheStatus::Hit, std::make_pair(name, value), CacheRule::KnownHeader};
            continue;
        }
        if (!catalog.knows_header(name)) continue;
        auto tokens = value_tokens(value);
        for (const auto& e : catalog.entries) {
            if (!iequals(e.header, name)) continue;
            for (const auto& t : tokens) {
                if (t == e.token)
                    return {e.verdict, std::make_pair(name, value), CacheRule::KnownHeader};
            }
        }
    }
    // (2) generic: any *cache* header carrying a HIT or MISS token
    for (const auto& [name, value] : headers) {
        if (to_lower(name).find("cache") == std::string::npos) continue;
        for (const auto& t : value_tokens(value)) {
            if (t == "HIT")
                return {CacheStatus::Hit, std::make_pair(name, value),
                        CacheRule::GenericCacheKeyword};
            if (t == "MISS")
                return {CacheStatus::Miss, std::make_pair(name, value),
                        CacheRule::GenericCacheKeyword};
        }
    }
    // (3) Age > 0 means the response sat in a cache
    for (const auto& [name, value] : headers) {
        if (!iequals(name, "age")) continue;
        auto n = parse_integer(value);
        if (n && *n > 0)
            return {CacheStatus::Hit, std::make_pair(name, value), CacheRule::AgeHeader};
    }
    return {};
}

}  // namespace nonce_audit
