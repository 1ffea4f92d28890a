#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nonce_audit/cache_heuristics.hpp"
#include "nonce_audit/crawler.hpp"
#include "nonce_audit/probe.hpp"

namespace nonce_audit {

enum class ReuseFlag { No, Yes, Unknown };
enum class Cause { Cache, ServerSide };
enum class Confidence { Conclusive, Probable };
enum class Scope { SameSessionOnly, CrossSession, Unknown };

struct CauseSignals {
    bool static_sitewide = false;
    std::optional<bool> cb_nonce_changed;  // absent when r3 missing
    CacheVerdict chh_r2;
    std::optional<CacheVerdict> chh_r3;
};

struct ReuseCause {
    Cause cause = Cause::ServerSide;
    Confidence confidence = Confidence::Probable;
    int rule = 0;  // which step of the decision procedure fired (1..5)
    bool cached_nonce_observed = false;
    CauseSignals signals;
};

struct SessionScope {
    Scope scope = Scope::Unknown;
    std::vector<std::string> reused_values;
    std::vector<std::string> r4_values;
};

// script-tag nonce values seen on r1, per page url, across the whole site
struct SiteNonceContext {
    std::map<std::string, std::set<std::string>> pages_by_value;

    void add(const std::string& page_url, const std::vector<std::string>& values);
    bool sitewide(const std::string& value) const;  // same value on >= 2 pages
};

ReuseFlag detect_reuse(const PageProbe& probe);
ReuseCause classify_cause(const PageProbe& probe, const SiteNonceContext& site_context);
SessionScope classify_session_scope(const PageProbe& probe);

struct PageResult {
    std::string url;
    bool csp_found = false;
    bool enforcement_seen = false;
    bool report_only_seen = false;
    bool nonce_used = false;
    ReuseFlag reuse = ReuseFlag::No;
    std::optional<Cause> cause;
    std::optional<Confidence> cause_confidence;
    int cause_rule = 0;
    bool cached_nonce_observed = false;
    std::optional<Scope> session_scope;
    bool short_nonce = false;
    bool invalid_nonce = false;
    bool length8_nonce = false;
    bool probed = false;
    std::vector<std::string> errors;
};

struct SiteReport {
    SiteTarget target;
    bool crawl_failed = false;
    bool uses_csp = false;
    bool enforcement_seen = false;
    bool report_only_seen = false;
    bool uses_nonce = false;
    bool reuses_nonce = false;
    std::optional<Cause> cause;
    std::optional<Confidence> cause_confidence;
    bool cached_nonce_observed = false;
    std::optional<Scope> session_scope;
    bool short_nonce = false;
    bool invalid_nonce = false;
    bool length8_nonce = false;
    std::vector<PageResult> pages;
};

// Site rollup: flag ORs; cause is Cache only when every reusing page is
// Cache; scope is CrossSession when any reusing page is.
SiteReport aggregate_site(const std::vector<PageResult>& pages, const SiteTarget& target);

// Full per-page classification for a completed probe.
PageResult classify_page(const PageProbe& probe, const CrawlPage& crawl_page,
                         const SiteNonceContext& site_context);

const char* cause_name(Cause cause);
const char* confidence_name(Confidence confidence);
const char* scope_name(Scope scope);
const char* reuse_name(ReuseFlag reuse);

}  // namespace nonce_audit
