#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nonce_audit/http.hpp"

namespace nonce_audit {

struct CrawlBudget {
    size_t max_subdomains = 10;
    size_t max_pages_per_subdomain = 10;
    size_t max_depth = std::numeric_limits<size_t>::max();
    double request_timeout_secs = 10.0;
    int min_request_interval_ms = 200;
    bool honor_robots = true;

    bool valid() const { return max_subdomains >= 1 && max_pages_per_subdomain >= 1; }
};

struct SiteTarget {
    std::string registrable_domain;  // lowercase DNS name
    std::optional<size_t> rank;      // position in the input toplist
    std::string scheme = "https";    // "http" for local simulator targets
};

struct CrawlPage {
    std::string url;  // normalized
    int status = 0;
    bool csp_found = false;
    bool enforcement_seen = false;
    bool report_only_seen = false;
    bool nonce_found = false;  // enforced policy nonce AND script-tag nonce
    bool short_nonce = false;
    bool invalid_nonce = false;
    bool length8_nonce = false;
};

struct CrawlError {
    std::string url;
    std::string kind;
    std::string message;
};

struct CrawlResult {
    SiteTarget target;
    std::vector<CrawlPage> pages;
    std::vector<CrawlError> errors;
    bool site_failed = false;  // homepage unreachable, site skipped
};

// Breadth-first over internal anchors from the homepage, https with http
// fallback, within the subdomain/page budgets.
CrawlResult crawl_site(const SiteTarget& target, const CrawlBudget& budget, Session& session);

}  // namespace nonce_audit
