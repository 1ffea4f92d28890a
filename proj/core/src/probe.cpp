#include "nonce_audit/probe.hpp"

#include <algorithm>
#include <random>
#include <thread>

#include "nonce_audit/csp.hpp"
#include "nonce_audit/url.hpp"

namespace nonce_audit {

namespace {

std::string random_hex(size_t n) {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static const char digits[] = "0123456789abcdef";
    std::uniform_int_distribution<int> dist(0, 15);
    std::string out;
    out.reserve(n);
    for (size_t i = 0; i < n; i++) out += digits[dist(rng)];
    return out;
}

bool values_intersect(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    for (const auto& v : a) {
        if (std::find(b.begin(), b.end(), v) != b.end()) return true;
    }
    return false;
}

}  // namespace

std::string add_cache_buster(const std::string& url) {
    std::string param = "cb" + random_hex(8) + "=" + random_hex(16);
    auto frag = url.find('#');
    std::string base = frag == std::string::npos ? url : url.substr(0, frag);
    char sep = base.find('?') == std::string::npos ? '?' : '&';
    return base + sep + param;
}

std::vector<std::string> PageProbe::script_nonce_values(int probe_index) const {
    std::vector<std::string> out;
    for (const auto& obs : nonces[probe_index - 1]) {
        if (obs.location == NonceLocation::ScriptTag) out.push_back(obs.value);
    }
    return out;
}

std::vector<NonceObservation> collect_nonces(const ProbeResponse& response,
                                             const std::string& page_url, int probe_index) {
    std::vector<NonceObservation> out;
    PolicySet policies = extract_policies(response.headers, response.body, page_url);
    for (const auto& policy : policies.policies) {
        for (const auto& [directive, value] : nonce_sources(policy)) {
            out.push_back({value, NonceLocation::PolicyDirective, directive, page_url,
                           probe_index});
        }
    }
    auto dom = extract_dom_nonces(response.body, page_url, probe_index);
    out.insert(out.end(), dom.begin(), dom.end());
    return out;
}

PageProbe run_probe_sequence(const std::string& url, Session& session, int probe_delay_ms) {
    PageProbe probe;
    probe.url = url;

    auto step = [&](const std::string& target, bool use_cookies,
                    int index) -> const ProbeResponse* {
        if (index > 1 && probe_delay_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(probe_delay_ms));
        FetchResult result = session.fetch(target, use_cookies);
        if (!result.ok()) {
            probe.error = result.error;
            probe.error_at = index;
            return nullptr;
        }
        std::optional<ProbeResponse>* slot[] = {&probe.r1, &probe.r2, &probe.r3, &probe.r4};
        *slot[index - 1] = std::move(result.response);
        const ProbeResponse& response = slot[index - 1]->value();
        probe.nonces[index - 1] = collect_nonces(response, url, index);
        return &response;
    };

    const ProbeResponse* r1 = step(url, true, 1);
    if (!r1) return probe;
    if (r1->status >= 400) {
        probe.error = FetchError{FetchError::Kind::Protocol,
                                 "baseline returned status " + std::to_string(r1->status)};
        probe.error_at = 1;
        return probe;
    }

    const ProbeResponse* r2 = step(url, true, 2);
    if (!r2) return probe;
    if (r2->status >= 400) {
        probe.error = FetchError{FetchError::Kind::Protocol,
                                 "reuse check returned status " + std::to_string(r2->status)};
        probe.error_at = 2;
        return probe;
    }

    // reuse keys on script-tag nonce values (the attack-relevant surface)
    if (!values_intersect(probe.script_nonce_values(1), probe.script_nonce_values(2)))
        return probe;

    probe.r3_url = add_cache_buster(url);
    if (!step(probe.r3_url, true, 3)) return probe;
    step(url, false, 4);
    return probe;
}

}  // namespace nonce_audit
