#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nonce_audit/headers.hpp"

namespace nonce_audit {

struct FetchError {
    enum class Kind { Connect, Timeout, Tls, Protocol, TooManyRedirects };
    Kind kind = Kind::Connect;
    std::string message;

    std::string kind_name() const;
};

struct ProbeResponse {
    std::string final_url;
    int status = 0;
    std::string reason;
    HeaderList headers;  // duplicates preserved
    std::string body;
    std::chrono::system_clock::time_point fetched_at;
    int cookie_jar_state = 0;  // jar version snapshot after this response
};

struct FetchResult {
    std::optional<ProbeResponse> response;
    std::optional<FetchError> error;

    bool ok() const { return response.has_value(); }
};

struct Cookie {
    std::string name;
    std::string value;
    std::string domain;  // lowercase
    bool host_only = true;
};

class CookieJar {
  public:
    // Minimal Set-Cookie handling: name=value plus the Domain attribute.
    void store(const std::string& request_host, std::string_view set_cookie);
    std::string header_for(const std::string& host) const;
    void clear() { cookies_.clear(); }
    bool empty() const { return cookies_.empty(); }
    size_t size() const { return cookies_.size(); }

  private:
    std::vector<Cookie> cookies_;
};

struct SessionConfig {
    std::string user_agent = "nonce-audit/1.0 (CSP research scanner)";
    double timeout_secs = 10.0;
    int min_interval_ms = 200;
    int max_redirects = 10;
    // Map every host to this address while keeping the Host header, for
    // scanning a local simulator (curl --resolve style).
    std::optional<std::pair<std::string, int>> resolve;
};

// One session per site: cookie-persistent, sequential, paced.
class Session {
  public:
    explicit Session(SessionConfig config = {});

    // One GET following redirects; with use_cookies=false no cookies are
    // sent and set-cookie effects are discarded.
    FetchResult fetch(const std::string& url, bool use_cookies = true);

    CookieJar& jar() { return jar_; }
    const SessionConfig& config() const { return config_; }

  private:
    void pace();

    SessionConfig config_;
    CookieJar jar_;
    int jar_version_ = 0;
    std::chrono::steady_clock::time_point last_request_{};
    bool any_request_ = false;
};

}  // namespace nonce_audit
