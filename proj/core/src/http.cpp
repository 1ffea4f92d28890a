#include "nonce_audit/http.hpp"

#include <thread>

#include <httplib.h>

#include "nonce_audit/url.hpp"

namespace nonce_audit {

std::string FetchError::kind_name() const {
    switch (kind) {
        case Kind::Connect: return "connect";
        case Kind::Timeout: return "timeout";
        case Kind::Tls: return "tls";
        case Kind::Protocol: return "protocol";
        case Kind::TooManyRedirects: return "too_many_redirects";
    }
    return "unknown";
}

void CookieJar::store(const std::string& request_host, std::string_view set_cookie) {
    auto semi = set_cookie.find(';');
    std::string_view pair =
        trim(semi == std::string_view::npos ? set_cookie : set_cookie.substr(0, semi));
    auto eq = pair.find('=');
    if (eq == std::string_view::npos || eq == 0) return;

    Cookie cookie;
    cookie.name = std::string(trim(pair.substr(0, eq)));
    cookie.value = std::string(trim(pair.substr(eq + 1)));
    cookie.domain = to_lower(request_host);
    cookie.host_only = true;

    std::string_view rest = semi == std::string_view::npos ? "" : set_cookie.substr(semi + 1);
    while (!rest.empty()) {
        auto next = rest.find(';');
        std::string_view attr = trim(next == std::string_view::npos ? rest : rest.substr(0, next));
        rest = next == std::string_view::npos ? "" : rest.substr(next + 1);
        auto attr_eq = attr.find('=');
        if (attr_eq == std::string_view::npos) continue;
        if (iequals(trim(attr.substr(0, attr_eq)), "domain")) {
            std::string domain = to_lower(trim(attr.substr(attr_eq + 1)));
            if (!domain.empty() && domain.front() == '.') domain.erase(0, 1);
            if (!domain.empty()) {
                cookie.domain = domain;
                cookie.host_only = false;
            }
        }
    }

    for (auto& existing : cookies_) {
        if (existing.name == cookie.name && existing.domain == cookie.domain) {
            existing = cookie;
            return;
        }
    }
    cookies_.push_back(std::move(cookie));
}

std::string CookieJar::header_for(const std::string& host) const {
    std::string h = to_lower(host);
    std::string out;
    for (const auto& cookie : cookies_) {
        bool match = cookie.host_only
                         ? h == cookie.domain
                         : (h == cookie.domain || h.ends_with("." + cookie.domain));
        if (!match) continue;
        if (!out.empty()) out += "; ";
        out += cookie.name + "=" + cookie.value;
    }
    return out;
}

Session::Session(SessionConfig config) : config_(std::move(config)) {}

void Session::pace() {
    if (any_request_ && config_.min_interval_ms > 0) {
        auto due = last_request_ + std::chrono::milliseconds(config_.min_interval_ms);
        std::this_thread::sleep_until(due);
    }
    last_request_ = std::chrono::steady_clock::now();
    any_request_ = true;
}

namespace {

FetchError::Kind map_error(httplib::Error err) {
    switch (err) {
        case httplib::Error::ConnectionTimeout:
        case httplib::Error::Read:
        case httplib::Error::Write:
            return FetchError::Kind::Timeout;
        case httplib::Error::SSLConnection:
        case httplib::Error::SSLLoadingCerts:
        case httplib::Error::SSLServerVerification:
            return FetchError::Kind::Tls;
        case httplib::Error::Connection:
            return FetchError::Kind::Connect;
        default:
            return FetchError::Kind::Protocol;
    }
}

bool is_redirect(int status) {
    return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

}  // namespace

FetchResult Session::fetch(const std::string& url, bool use_cookies) {
    std::string current = url;
    for (int hop = 0; hop <= config_.max_redirects; hop++) {
        auto u = parse_url(current);
        if (!u || (u->scheme != "http" && u->scheme != "https")) {
            return {std::nullopt, FetchError{FetchError::Kind::Protocol, "bad url: " + current}};
        }

        std::string connect_host = config_.resolve ? config_.resolve->first : u->host;
        int connect_port = config_.resolve ? config_.resolve->second : u->effective_port();

        httplib::Headers request_headers;
        if (u->has_default_port()) {
            request_headers.emplace("Host", u->host);
        } else {
            request_headers.emplace("Host", u->host + ":" + std::to_string(u->port));
        }
        request_headers.emplace("User-Agent", config_.user_agent);
        request_headers.emplace("Accept", "text/html,*/*");
        if (use_cookies) {
            std::string cookie = jar_.header_for(u->host);
            if (!cookie.empty()) request_headers.emplace("Cookie", cookie);
        }

        std::string target = u->path.empty() ? "/" : u->path;
        if (!u->query.empty()) target += "?" + u->query;

        pace();
        httplib::Result res;
        auto timeout_ms = static_cast<time_t>(config_.timeout_secs * 1000);
        if (u->scheme == "https") {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
            httplib::SSLClient cli(connect_host, connect_port);
            cli.enable_server_certificate_verification(false);
            cli.set_connection_timeout(0, timeout_ms * 1000);
            cli.set_read_timeout(0, timeout_ms * 1000);
            res = cli.Get(target, request_headers);
#else
            return {std::nullopt, FetchError{FetchError::Kind::Tls, "built without TLS support"}};
#endif
        } else {
            httplib::Client cli(connect_host, connect_port);
            cli.set_connection_timeout(0, timeout_ms * 1000);
            cli.set_read_timeout(0, timeout_ms * 1000);
            res = cli.Get(target, request_headers);
        }

        if (!res) {
            return {std::nullopt,
                    FetchError{map_error(res.error()), httplib::to_string(res.error())}};
        }

        if (use_cookies) {
            auto range = res->headers.equal_range("Set-Cookie");
            for (auto it = range.first; it != range.second; ++it) {
                jar_.store(u->host, it->second);
                jar_version_++;
            }
        }

        if (is_redirect(res->status)) {
            std::string location = res->get_header_value("Location");
            if (!location.empty() && hop < config_.max_redirects) {
                auto next = resolve_url(location, *u);
                if (!next) {
                    return {std::nullopt,
                            FetchError{FetchError::Kind::Protocol, "bad redirect: " + location}};
                }
                current = *next;
                continue;
            }
            if (hop >= config_.max_redirects) {
                return {std::nullopt,
                        FetchError{FetchError::Kind::TooManyRedirects, "redirect limit reached"}};
            }
        }

        ProbeResponse out;
        out.final_url = current;
        out.status = res->status;
        out.reason = res->reason;
        for (const auto& [name, value] : res->headers) {
            out.headers.emplace_back(name, value);
        }
        out.body = res->body;
        out.fetched_at = std::chrono::system_clock::now();
        out.cookie_jar_state = jar_version_;
        return {std::move(out), std::nullopt};
    }
    return {std::nullopt, FetchError{FetchError::Kind::TooManyRedirects, "redirect limit reached"}};
}

}  // namespace nonce_audit
