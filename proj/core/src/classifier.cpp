#include "nonce_audit/classifier.hpp"

#include <algorithm>

namespace nonce_audit {

void SiteNonceContext::add(const std::string& page_url, const std::vector<std::string>& values) {
    for (const auto& value : values) pages_by_value[value].insert(page_url);
}

bool SiteNonceContext::sitewide(const std::string& value) const {
    auto it = pages_by_value.find(value);
    return it != pages_by_value.end() && it->second.size() >= 2;
}

namespace {

std::vector<std::string> reused_values(const PageProbe& probe) {
    std::vector<std::string> out;
    auto v1 = probe.script_nonce_values(1);
    auto v2 = probe.script_nonce_values(2);
    for (const auto& value : v1) {
        if (std::find(v2.begin(), v2.end(), value) != v2.end() &&
            std::find(out.begin(), out.end(), value) == out.end())
            out.push_back(value);
    }
    return out;
}

}  // namespace

ReuseFlag detect_reuse(const PageProbe& probe) {
    if (!probe.r1 || !probe.r2) return ReuseFlag::Unknown;
    if (probe.error && probe.error_at <= 2) return ReuseFlag::Unknown;
    return reused_values(probe).empty() ? ReuseFlag::No : ReuseFlag::Yes;
}

ReuseCause classify_cause(const PageProbe& probe, const SiteNonceContext& site_context) {
    auto reused = reused_values(probe);

    CauseSignals signals;
    signals.chh_r2 = probe.r2 ? classify_response(probe.r2->headers) : CacheVerdict{};
    if (probe.r3) {
        signals.chh_r3 = classify_response(probe.r3->headers);
        auto v3 = probe.script_nonce_values(3);
        bool any_repeat = std::any_of(reused.begin(), reused.end(), [&](const std::string& v) {
            return std::find(v3.begin(), v3.end(), v) != v3.end();
        });
        signals.cb_nonce_changed = !any_repeat;
    }
    signals.static_sitewide = std::any_of(
        reused.begin(), reused.end(),
        [&](const std::string& v) { return site_context.sitewide(v); });

    ReuseCause out;
    out.signals = signals;
    if (signals.chh_r2.status == CacheStatus::Miss) {
        // origin served the repeat itself; a cache is conclusively excluded
        out.cause = Cause::ServerSide;
        out.confidence = Confidence::Conclusive;
        out.rule = 1;
    } else if (signals.cb_nonce_changed.value_or(false)) {
        out.cause = Cause::Cache;
        out.confidence = Confidence::Conclusive;
        out.rule = 2;
    } else if (signals.cb_nonce_changed.has_value() && !*signals.cb_nonce_changed &&
               signals.chh_r3 && signals.chh_r3->status == CacheStatus::Miss) {
        out.cause = Cause::ServerSide;
        out.confidence = Confidence::Conclusive;
        out.rule = 3;
    } else if (signals.static_sitewide) {
        out.cause = Cause::ServerSide;
        out.confidence = Confidence::Conclusive;
        out.rule = 4;
    } else {
        out.cause = Cause::ServerSide;
        out.confidence = Confidence::Probable;
        out.rule = 5;
    }

    out.cached_nonce_observed = out.rule == 2 || signals.chh_r2.status == CacheStatus::Hit;
    return out;
}

SessionScope classify_session_scope(const PageProbe& probe) {
    SessionScope out;
    out.reused_values = reused_values(probe);
    if (!probe.r4) {
        out.scope = Scope::Unknown;
        return out;
    }
    out.r4_values = probe.script_nonce_values(4);
    bool cross = std::any_of(out.reused_values.begin(), out.reused_values.end(),
                             [&](const std::string& v) {
                                 return std::find(out.r4_values.begin(), out.r4_values.end(),
                                                  v) != out.r4_values.end();
                             });
    out.scope = cross ? Scope::CrossSession : Scope::SameSessionOnly;
    return out;
}

PageResult classify_page(const PageProbe& probe, const CrawlPage& crawl_page,
                         const SiteNonceContext& site_context) {
    PageResult result;
    result.url = probe.url;
    result.csp_found = crawl_page.csp_found;
    result.enforcement_seen = crawl_page.enforcement_seen;
    result.report_only_seen = crawl_page.report_only_seen;
    result.nonce_used = crawl_page.nonce_found;
    result.short_nonce = crawl_page.short_nonce;
    result.invalid_nonce = crawl_page.invalid_nonce;
    result.length8_nonce = crawl_page.length8_nonce;
    result.probed = true;

    if (probe.error) {
        result.errors.push_back("r" + std::to_string(probe.error_at) + " " +
                                probe.error->kind_name() + ": " + probe.error->message);
    }

    // probe responses can surface nonces the crawl fetch did not
    for (int i = 1; i <= 4; i++) {
        for (const auto& obs : probe.nonces[i - 1]) {
            if (auto length = check_length(obs.value)) {
                result.short_nonce |= length->is_short;
                result.length8_nonce |= length->useful_chars == 8;
            }
            result.invalid_nonce |= !check_validity(obs.value).is_valid;
        }
    }

    result.reuse = detect_reuse(probe);
    if (result.reuse != ReuseFlag::Yes) return result;

    ReuseCause cause = classify_cause(probe, site_context);
    result.cause = cause.cause;
    result.cause_confidence = cause.confidence;
    result.cause_rule = cause.rule;
    result.cached_nonce_observed = cause.cached_nonce_observed;
    result.session_scope = classify_session_scope(probe).scope;
    return result;
}

SiteReport aggregate_site(const std::vector<PageResult>& pages, const SiteTarget& target) {
    SiteReport report;
    report.target = target;
    report.pages = pages;

    bool all_reusing_cache = true;
    bool any_reusing = false;
    bool all_conclusive = true;
    bool any_cross = false;
    bool any_same = false;

    for (const auto& page : pages) {
        report.uses_csp |= page.csp_found;
        report.enforcement_seen |= page.enforcement_seen;
        report.report_only_seen |= page.report_only_seen;
        report.uses_nonce |= page.nonce_used;
        report.cached_nonce_observed |= page.cached_nonce_observed;
        report.short_nonce |= page.short_nonce;
        report.invalid_nonce |= page.invalid_nonce;
        report.length8_nonce |= page.length8_nonce;

        if (page.reuse == ReuseFlag::Yes) {
            any_reusing = true;
            if (page.cause != Cause::Cache) all_reusing_cache = false;
            if (page.cause_confidence == Confidence::Probable) all_conclusive = false;
            if (page.session_scope == Scope::CrossSession) any_cross = true;
            if (page.session_scope == Scope::SameSessionOnly) any_same = true;
        }
    }

    report.reuses_nonce = any_reusing;
    if (any_reusing) {
        // "solely due to a cache": every reusing page must be Cache
        report.cause = all_reusing_cache ? Cause::Cache : Cause::ServerSide;
        report.cause_confidence =
            all_conclusive ? Confidence::Conclusive : Confidence::Probable;
        if (any_cross) {
            report.session_scope = Scope::CrossSession;
        } else if (any_same) {
            report.session_scope = Scope::SameSessionOnly;
        }
    }
    return report;
}

const char* cause_name(Cause cause) {
    return cause == Cause::Cache ? "cache" : "server_side";
}

const char* confidence_name(Confidence confidence) {
    return confidence == Confidence::Conclusive ? "conclusive" : "probable";
}

const char* scope_name(Scope scope) {
    switch (scope) {
        case Scope::SameSessionOnly: return "same_session_only";
        case Scope::CrossSession: return "cross_session";
        case Scope::Unknown: return "unknown";
    }
    return "unknown";
}

const char* reuse_name(ReuseFlag reuse) {
    switch (reuse) {
        case ReuseFlag::No: return "no";
        case ReuseFlag::Yes: return "yes";
        case ReuseFlag::Unknown: return "unknown";
    }
    return "unknown";
}

}  // namespace nonce_audit
