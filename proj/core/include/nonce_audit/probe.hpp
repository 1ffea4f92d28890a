#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nonce_audit/http.hpp"
#include "nonce_audit/nonce.hpp"

namespace nonce_audit {

// Append one random query parameter (cb<8 hex>=<16 hex>) so the request
// gets a distinct cache key; the existing query is untouched.
std::string add_cache_buster(const std::string& url);

struct PageProbe {
    std::string url;
    std::optional<ProbeResponse> r1;  // baseline
    std::optional<ProbeResponse> r2;  // reuse check
    std::optional<ProbeResponse> r3;  // cache-busted, only after reuse
    std::optional<ProbeResponse> r4;  // cookie-free, only after reuse
    std::string r3_url;

    // Per-response observations (policy + DOM), index 0..3 = r1..r4.
    std::vector<NonceObservation> nonces[4];

    std::optional<FetchError> error;
    int error_at = 0;  // probe index (1..4) of the failed fetch, 0 = none

    std::vector<std::string> script_nonce_values(int probe_index) const;
};

// Collect policy-nonce and DOM-nonce observations from one response.
std::vector<NonceObservation> collect_nonces(const ProbeResponse& response,
                                             const std::string& page_url, int probe_index);

// r1, r2 with cookies; when a script-tag nonce repeats, r3 at the
// cache-busted URL, then r4 without cookies.
PageProbe run_probe_sequence(const std::string& url, Session& session, int probe_delay_ms = 0);

}  // namespace nonce_audit
