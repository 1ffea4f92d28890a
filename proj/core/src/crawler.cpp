#include "nonce_audit/crawler.hpp"

#include <deque>
#include <map>
#include <set>

#include "nonce_audit/csp.hpp"
#include "nonce_audit/html.hpp"
#include "nonce_audit/nonce.hpp"
#include "nonce_audit/url.hpp"

namespace nonce_audit {

namespace {

struct RobotsRules {
    bool fetched = false;
    std::vector<std::string> disallows;  // path prefixes for User-agent: *

    bool allows(const std::string& path) const {
        for (const auto& prefix : disallows) {
            if (!prefix.empty() && path.starts_with(prefix)) return false;
        }
        return true;
    }
};

RobotsRules fetch_robots(Session& session, const std::string& scheme, const std::string& host) {
    RobotsRules rules;
    rules.fetched = true;
    FetchResult result = session.fetch(scheme + "://" + host + "/robots.txt", true);
    if (!result.ok() || result.response->status != 200) return rules;

    // only User-agent: * groups
    bool applies = false;
    std::string_view body = result.response->body;
    size_t pos = 0;
    while (pos <= body.size()) {
        auto nl = body.find('\n', pos);
        std::string_view line =
            nl == std::string_view::npos ? body.substr(pos) : body.substr(pos, nl - pos);
        pos = nl == std::string_view::npos ? body.size() + 1 : nl + 1;
        auto hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        std::string_view field = trim(line.substr(0, colon));
        std::string_view value = trim(line.substr(colon + 1));
        if (iequals(field, "user-agent")) {
            applies = value == "*";
        } else if (applies && iequals(field, "disallow") && !value.empty()) {
            rules.disallows.emplace_back(value);
        }
    }
    return rules;
}

CrawlPage analyze_page(const std::string& url, const ProbeResponse& response) {
    CrawlPage page;
    page.url = url;
    page.status = response.status;

    PolicySet policies = extract_policies(response.headers, response.body, url);
    for (const auto& policy : policies.policies) {
        page.csp_found = true;
        if (policy.disposition == Disposition::Enforce) {
            page.enforcement_seen = true;
        } else {
            page.report_only_seen = true;
        }
    }

    auto dom_nonces = extract_dom_nonces(response.body, url, 1);
    bool script_nonce_present = false;
    for (const auto& obs : dom_nonces) {
        if (obs.location == NonceLocation::ScriptTag) script_nonce_present = true;
    }
    page.nonce_found = policies.any_enforced_nonce() && script_nonce_present;

    // length/validity over every nonce seen, in the policy or the DOM
    std::vector<std::string> values;
    for (const auto& policy : policies.policies) {
        for (const auto& [directive, value] : nonce_sources(policy)) values.push_back(value);
    }
    for (const auto& obs : dom_nonces) values.push_back(obs.value);
    for (const auto& value : values) {
        if (auto length = check_length(value)) {
            page.short_nonce |= length->is_short;
            page.length8_nonce |= length->useful_chars == 8;
        }
        page.invalid_nonce |= !check_validity(value).is_valid;
    }
    return page;
}

}  // namespace

CrawlResult crawl_site(const SiteTarget& target, const CrawlBudget& budget, Session& session) {
    CrawlResult result;
    result.target = target;
    if (!budget.valid()) {
        result.site_failed = true;
        result.errors.push_back({"", "config", "invalid crawl budget"});
        return result;
    }

    std::string scheme = target.scheme;
    std::string homepage = scheme + "://" + target.registrable_domain + "/";

    std::deque<std::pair<std::string, size_t>> queue;  // url, depth
    std::set<std::string> enqueued;
    std::set<std::string> hosts_visited;
    std::map<std::string, size_t> pages_per_host;
    std::map<std::string, RobotsRules> robots;

    queue.emplace_back(homepage, 0);
    enqueued.insert(homepage);
    bool first_fetch = true;

    while (!queue.empty()) {
        auto [url, depth] = queue.front();
        queue.pop_front();

        auto u = parse_url(url);
        if (!u) continue;

        // budgets
        if (!hosts_visited.contains(u->host) && hosts_visited.size() >= budget.max_subdomains)
            continue;
        if (pages_per_host[u->host] >= budget.max_pages_per_subdomain) continue;

        if (budget.honor_robots) {
            auto it = robots.find(u->host);
            if (it == robots.end()) {
                it = robots.emplace(u->host, fetch_robots(session, scheme, u->host)).first;
            }
            if (!it->second.allows(u->path)) continue;
        }

        FetchResult fetched = session.fetch(url, true);
        if (!fetched.ok()) {
            // https homepage failing on TLS/connect falls back to http once
            if (first_fetch && scheme == "https" &&
                (fetched.error->kind == FetchError::Kind::Tls ||
                 fetched.error->kind == FetchError::Kind::Connect)) {
                scheme = "http";
                homepage = "http://" + target.registrable_domain + "/";
                queue.emplace_back(homepage, 0);
                enqueued.insert(homepage);
                first_fetch = false;
                continue;
            }
            result.errors.push_back({url, fetched.error->kind_name(), fetched.error->message});
            if (first_fetch) {
                result.site_failed = true;
                return result;
            }
            continue;
        }
        first_fetch = false;

        hosts_visited.insert(u->host);
        pages_per_host[u->host]++;

        const ProbeResponse& response = *fetched.response;
        result.pages.push_back(analyze_page(url, response));

        // a redirect that landed on an external host terminates the branch
        if (!is_internal(response.final_url, target.registrable_domain)) continue;
        if (depth >= budget.max_depth) continue;

        for (const auto& link : extract_links(response.body, response.final_url)) {
            if (!is_internal(link, target.registrable_domain)) continue;
            if (!enqueued.insert(link).second) continue;
            queue.emplace_back(link, depth + 1);
        }
    }
    return result;
}

}  // namespace nonce_audit
