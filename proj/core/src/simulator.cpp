#include "nonce_audit/simulator.hpp"

#include <httplib.h>

#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "nonce_audit/reporting.hpp"

namespace nonce_audit {

using nlohmann::json;

namespace {

const char kBase64UrlAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

std::string random_b64url(int length, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> dist(0, 63);
    std::string out;
    out.reserve(length);
    for (int i = 0; i < length; i++) out += kBase64UrlAlphabet[dist(rng)];
    return out;
}

std::string apply_alphabet(std::string nonce, NonceAlphabet alphabet) {
    if (alphabet == NonceAlphabet::WithInvalidChar && nonce.size() >= 2) {
        nonce[1] = '$';
    }
    return nonce;
}

std::optional<std::string> cookie_value(const httplib::Request& req, const std::string& name) {
    if (!req.has_header("Cookie")) return std::nullopt;
    std::string header = req.get_header_value("Cookie");
    std::string_view rest = header;
    while (!rest.empty()) {
        auto semi = rest.find(';');
        std::string_view pair = trim(semi == std::string_view::npos ? rest : rest.substr(0, semi));
        rest = semi == std::string_view::npos ? "" : rest.substr(semi + 1);
        auto eq = pair.find('=');
        if (eq == std::string_view::npos) continue;
        if (trim(pair.substr(0, eq)) == name) return std::string(trim(pair.substr(eq + 1)));
    }
    return std::nullopt;
}

struct Rendered {
    int status = 200;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

}  // namespace

struct Simulator::Impl {
    httplib::Server server;
    std::thread thread;
    mutable std::mutex mutex;
    std::vector<RequestLogEntry> log;
    std::map<std::string, Rendered> cache;         // cache key -> stored response
    std::map<std::string, std::string> static_nonces;  // scenario -> fixed value
    std::mt19937_64 rng{std::random_device{}()};
    bool routes_installed = false;
};

Simulator::Simulator(std::vector<Scenario> scenarios)
    : impl_(std::make_unique<Impl>()), scenarios_(std::move(scenarios)) {}

Simulator::~Simulator() { stop(); }

const Scenario* Simulator::find_scenario(const std::string& host) const {
    for (const auto& scenario : scenarios_) {
        std::string apex = scenario.apex_host();
        if (host == apex || host.ends_with("." + apex)) return &scenario;
    }
    return nullptr;
}

namespace {

// Which page of the topology a path addresses: 0 = homepage, -1 = none.
int page_index(const Scenario& scenario, const std::string& path) {
    if (path == "/") return 0;
    if (path.size() > 2 && path.starts_with("/p")) {
        int n = 0;
        for (size_t i = 2; i < path.size(); i++) {
            if (!std::isdigit(static_cast<unsigned char>(path[i]))) return -1;
            n = n * 10 + (path[i] - '0');
        }
        if (n >= 1 && n < scenario.pages) return n;
    }
    return -1;
}

std::string page_links(const Scenario& scenario, const std::string& host,
                       const std::string& path) {
    std::ostringstream out;
    if (path != "/") return "";
    if (host == scenario.apex_host()) {
        for (int i = 1; i < scenario.subdomains; i++) {
            out << "<a href=\"http://s" << i << "." << scenario.apex_host()
                << "/\">sub " << i << "</a>\n";
        }
    }
    for (int i = 1; i < scenario.pages; i++) {
        out << "<a href=\"/p" << i << "\">page " << i << "</a>\n";
    }
    // one external link, never to be followed
    out << "<a href=\"http://external.example/\">elsewhere</a>\n";
    return out.str();
}

}  // namespace

ExpectedLabels ground_truth(const Scenario& scenario) {
    ExpectedLabels expected;
    bool enforced = scenario.delivery == CspDelivery::Header ||
                    scenario.delivery == CspDelivery::Meta ||
                    scenario.delivery == CspDelivery::Both;
    expected.uses_csp = enforced || scenario.delivery == CspDelivery::ReportOnlyHeader;
    expected.uses_nonce = enforced;
    expected.short_nonce = expected.uses_nonce && scenario.nonce_length < 22;
    expected.invalid_nonce =
        expected.uses_nonce && scenario.alphabet == NonceAlphabet::WithInvalidChar;
    if (!expected.uses_nonce) return expected;

    bool has_cache = scenario.cache != SimCacheMode::None;
    bool header_present = !scenario.cache_header.name.empty();
    int total_pages = scenario.subdomains * scenario.pages;

    switch (scenario.mode) {
        case NonceMode::FreshPerRequest:
            expected.reuse = false;
            return expected;
        case NonceMode::StaticGlobal:
            expected.reuse = true;
            expected.cause = Cause::ServerSide;
            if (!has_cache && header_present) {
                expected.confidence = Confidence::Conclusive;  // origin answers MISS
            } else if (has_cache && header_present && scenario.cache == SimCacheMode::QueryInKey) {
                expected.confidence = Confidence::Conclusive;  // busted MISS, same value
            } else if (total_pages >= 2) {
                expected.confidence = Confidence::Conclusive;  // one value site-wide
            } else {
                expected.confidence = Confidence::Probable;
            }
            expected.scope = Scope::CrossSession;
            break;
        case NonceMode::SessionBound:
            expected.reuse = true;
            expected.cause = Cause::ServerSide;
            if (header_present) {
                expected.confidence = Confidence::Conclusive;  // origin answers MISS
            } else if (total_pages >= 2) {
                expected.confidence = Confidence::Conclusive;  // same value on every page
            } else {
                expected.confidence = Confidence::Probable;
            }
            expected.scope = Scope::SameSessionOnly;
            break;
        case NonceMode::FreshButCached:
            expected.reuse = true;
            if (scenario.cache == SimCacheMode::QueryInKey) {
                expected.cause = Cause::Cache;
                expected.confidence = Confidence::Conclusive;  // busting yields a fresh value
            } else {
                // unkeyed query defeats cache-busting; not attributable
                expected.cause = Cause::ServerSide;
                expected.confidence = Confidence::Probable;
            }
            expected.scope = Scope::CrossSession;  // the cache answers cookie-free requests too
            break;
    }
    expected.cached_observed =
        (scenario.mode == NonceMode::FreshButCached && scenario.cache == SimCacheMode::QueryInKey) ||
        (has_cache && header_present);
    return expected;
}

bool Simulator::start(int port) {
    auto& impl = *impl_;
    if (!impl.routes_installed) install_routes();
    if (!impl.server.bind_to_port("127.0.0.1", port)) return false;
    port_ = port;
    impl.thread = std::thread([this]() { impl_->server.listen_after_bind(); });
    impl.server.wait_until_ready();
    return true;
}

void Simulator::install_routes() {
    auto& impl = *impl_;
    impl.routes_installed = true;
    impl.server.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
        auto& impl = *impl_;
        std::string host = req.get_header_value("Host");
        auto colon = host.find(':');
        if (colon != std::string::npos) host = host.substr(0, colon);
        host = to_lower(host);

        if (req.path == "/__log__") {
            json out = json::array();
            std::lock_guard lock(impl.mutex);
            for (const auto& e : impl.log) {
                out.push_back({{"method", e.method},
                               {"host", e.host},
                               {"target", e.target},
                               {"has_cookie", e.has_cookie}});
            }
            res.set_content(out.dump(), "application/json");
            return;
        }

        std::string target = req.target.empty() ? req.path : req.target;
        {
            std::lock_guard lock(impl.mutex);
            impl.log.push_back({req.method, host, target, req.has_header("Cookie")});
        }

        const Scenario* scenario = find_scenario(host);
        if (!scenario || req.path == "/robots.txt") {
            res.status = 404;
            res.set_content("not found", "text/plain");
            return;
        }
        int page = page_index(*scenario, req.path);
        if (page < 0) {
            res.status = 404;
            res.set_content("not found", "text/plain");
            return;
        }

        auto sid = cookie_value(req, "sid");
        std::string effective_sid;
        bool new_session = !sid.has_value();
        {
            std::lock_guard lock(impl.mutex);
            effective_sid = sid ? *sid : random_b64url(16, impl.rng);
        }

        auto render = [&]() {
            Rendered r;
            std::string nonce;
            {
                std::lock_guard lock(impl.mutex);
                switch (scenario->mode) {
                    case NonceMode::FreshPerRequest:
                    case NonceMode::FreshButCached:
                        nonce = random_b64url(scenario->nonce_length, impl.rng);
                        break;
                    case NonceMode::StaticGlobal: {
                        auto it = impl.static_nonces.find(scenario->name);
                        if (it == impl.static_nonces.end()) {
                            it = impl.static_nonces
                                     .emplace(scenario->name,
                                              random_b64url(scenario->nonce_length, impl.rng))
                                     .first;
                        }
                        nonce = it->second;
                        break;
                    }
                    case NonceMode::SessionBound:
                        nonce = sha256_hex(scenario->name + "|" + effective_sid)
                                    .substr(0, scenario->nonce_length);
                        break;
                }
            }
            nonce = apply_alphabet(nonce, scenario->alphabet);

            std::string policy =
                "default-src 'self'; script-src 'nonce-" + nonce + "' 'self'";
            std::string meta;
            switch (scenario->delivery) {
                case CspDelivery::Header:
                    r.headers.emplace_back("Content-Security-Policy", policy);
                    break;
                case CspDelivery::Meta:
                    meta = "<meta http-equiv=\"Content-Security-Policy\" content=\"" + policy +
                           "\">";
                    break;
                case CspDelivery::Both:
                    r.headers.emplace_back("Content-Security-Policy", policy);
                    meta = "<meta http-equiv=\"Content-Security-Policy\" content=\"" + policy +
                           "\">";
                    break;
                case CspDelivery::ReportOnlyHeader:
                    r.headers.emplace_back("Content-Security-Policy-Report-Only",
                                           policy + "; report-uri /csp-report");
                    break;
                case CspDelivery::ReportOnlyMeta:
                    meta = "<meta http-equiv=\"Content-Security-Policy-Report-Only\" content=\"" +
                           policy + "\">";
                    break;
            }

            std::ostringstream body;
            body << "<!DOCTYPE html>\n<html><head>" << meta << "<title>" << scenario->name
                 << "</title></head>\n<body>\n"
                 << page_links(*scenario, host, req.path)
                 << "<script nonce=\"" << nonce << "\">console.log(\"inline\");</script>\n"
                 << "</body></html>\n";
            r.body = body.str();
            return r;
        };

        Rendered response;
        bool from_cache = false;
        if (scenario->cache != SimCacheMode::None) {
            std::string key = host + req.path;
            if (scenario->cache == SimCacheMode::QueryInKey && !target.empty()) {
                auto qmark = target.find('?');
                if (qmark != std::string::npos) key += target.substr(qmark);
            }
            std::unique_lock lock(impl.mutex);
            auto it = impl.cache.find(key);
            if (it != impl.cache.end()) {
                response = it->second;  // stored copies replayed byte-identically
                from_cache = true;
            } else {
                lock.unlock();
                response = render();
                lock.lock();
                impl.cache.emplace(key, response);
            }
        } else {
            response = render();
        }

        if (!scenario->cache_header.name.empty()) {
            response.headers.emplace_back(scenario->cache_header.name,
                                          from_cache ? scenario->cache_header.hit_value
                                                     : scenario->cache_header.miss_value);
        }
        for (const auto& [name, value] : response.headers) {
            res.set_header(name, value);
        }
        if (new_session) {
            res.set_header("Set-Cookie", "sid=" + effective_sid + "; Path=/");
        }
        res.status = response.status;
        res.set_content(response.body, "text/html; charset=utf-8");
    });
}

bool Simulator::start_any_port() {
    if (port_ != 0) return false;
    for (int port = 18080; port < 18280; port++) {
        if (start(port)) return true;
    }
    return false;
}

void Simulator::stop() {
    auto& impl = *impl_;
    if (impl.thread.joinable()) {
        impl.server.stop();
        impl.thread.join();
    }
}

std::vector<RequestLogEntry> Simulator::request_log() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->log;
}

namespace {

std::optional<NonceMode> parse_mode(const std::string& s) {
    if (s == "fresh_per_request") return NonceMode::FreshPerRequest;
    if (s == "static_global") return NonceMode::StaticGlobal;
    if (s == "session_bound") return NonceMode::SessionBound;
    if (s == "fresh_but_cached") return NonceMode::FreshButCached;
    return std::nullopt;
}

std::optional<CspDelivery> parse_delivery(const std::string& s) {
    if (s == "header") return CspDelivery::Header;
    if (s == "meta") return CspDelivery::Meta;
    if (s == "both") return CspDelivery::Both;
    if (s == "report_only_header") return CspDelivery::ReportOnlyHeader;
    if (s == "report_only_meta") return CspDelivery::ReportOnlyMeta;
    return std::nullopt;
}

std::optional<SimCacheMode> parse_cache(const std::string& s) {
    if (s == "none") return SimCacheMode::None;
    if (s == "query_in_key") return SimCacheMode::QueryInKey;
    if (s == "query_ignored") return SimCacheMode::QueryIgnored;
    return std::nullopt;
}

std::string validate(const Scenario& s) {
    if (s.name.empty()) return "scenario name required";
    for (char c : s.name) {
        if (!std::islower(static_cast<unsigned char>(c)) &&
            !std::isdigit(static_cast<unsigned char>(c)) && c != '-')
            return "scenario name must be lowercase [a-z0-9-]: " + s.name;
    }
    if (s.nonce_length < 1) return s.name + ": nonce_length must be >= 1";
    if (s.subdomains < 1 || s.pages < 1) return s.name + ": topology must be >= 1x1";
    if (s.mode == NonceMode::FreshButCached && s.cache == SimCacheMode::None)
        return s.name + ": fresh_but_cached requires a cache";
    if (s.mode == NonceMode::FreshPerRequest && s.cache != SimCacheMode::None)
        return s.name + ": fresh_per_request behind a cache is fresh_but_cached";
    if (s.mode == NonceMode::SessionBound && s.cache != SimCacheMode::None)
        return s.name + ": session_bound scenarios run without a cache";
    return "";
}

}  // namespace

ScenarioParseResult parse_scenarios(const json& config) {
    ScenarioParseResult out;
    if (!config.is_object() || !config.contains("scenarios") ||
        !config["scenarios"].is_array()) {
        out.error = "config must be an object with a 'scenarios' array";
        return out;
    }
    for (const auto& entry : config["scenarios"]) {
        Scenario s;
        try {
            s.name = entry.at("name").get<std::string>();
            auto mode = parse_mode(entry.at("nonce_mode").get<std::string>());
            if (!mode) {
                out.error = s.name + ": unknown nonce_mode";
                return out;
            }
            s.mode = *mode;
            s.nonce_length = entry.value("nonce_length", 22);
            s.alphabet = entry.value("nonce_alphabet", std::string("base64url")) ==
                                 "with_invalid_char"
                             ? NonceAlphabet::WithInvalidChar
                             : NonceAlphabet::Base64Url;
            auto delivery = parse_delivery(entry.value("csp_delivery", std::string("header")));
            if (!delivery) {
                out.error = s.name + ": unknown csp_delivery";
                return out;
            }
            s.delivery = *delivery;
            auto cache = parse_cache(entry.value("cache", std::string("none")));
            if (!cache) {
                out.error = s.name + ": unknown cache mode";
                return out;
            }
            s.cache = *cache;
            if (entry.contains("cache_header")) {
                const auto& h = entry["cache_header"];
                s.cache_header.name = h.value("name", "");
                s.cache_header.hit_value = h.value("hit", "HIT");
                s.cache_header.miss_value = h.value("miss", "MISS");
            }
            s.subdomains = entry.value("subdomains", 1);
            s.pages = entry.value("pages", 2);
        } catch (const json::exception& e) {
            out.error = std::string("bad scenario entry: ") + e.what();
            return out;
        }
        std::string error = validate(s);
        if (!error.empty()) {
            out.error = error;
            return out;
        }
        out.scenarios.push_back(std::move(s));
    }
    return out;
}

ScenarioParseResult load_scenarios(const std::filesystem::path& file) {
    ScenarioParseResult out;
    std::ifstream in(file);
    if (!in) {
        out.error = "cannot open " + file.string();
        return out;
    }
    json config = json::parse(in, nullptr, false);
    if (config.is_discarded()) {
        out.error = "invalid JSON in " + file.string();
        return out;
    }
    return parse_scenarios(config);
}

std::vector<Scenario> default_scenarios() {
    std::vector<Scenario> out;
    auto add = [&](Scenario s) { out.push_back(std::move(s)); };
    CacheHeaderSpec none;
    CacheHeaderSpec xcache{"x-cache", "HIT from sim-edge", "MISS from sim-edge"};
    CacheHeaderSpec cf{"cf-cache-status", "HIT", "MISS"};
    CacheHeaderSpec xcs{"x-cache-status", "HIT", "MISS"};

    // fresh nonces, nothing to report
    add({"fresh", NonceMode::FreshPerRequest, 22, NonceAlphabet::Base64Url, CspDelivery::Header,
         SimCacheMode::None, none, 1, 3});
    // server-side reuse, every decision rule once
    add({"static-sitewide", NonceMode::StaticGlobal, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::None, none, 1, 3});
    add({"static-origin-miss", NonceMode::StaticGlobal, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::None, xcache, 1, 1});
    add({"static-single-page", NonceMode::StaticGlobal, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::None, none, 1, 1});
    add({"static-cached-keyed", NonceMode::StaticGlobal, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::QueryInKey, xcache, 1, 2});
    add({"static-cached-unkeyed", NonceMode::StaticGlobal, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::QueryIgnored, cf, 1, 2});
    // cache-caused reuse
    add({"cached-fresh-keyed", NonceMode::FreshButCached, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::QueryInKey, xcache, 1, 2});
    add({"cached-fresh-keyed-silent", NonceMode::FreshButCached, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::QueryInKey, none, 1, 2});
    add({"cached-fresh-unkeyed", NonceMode::FreshButCached, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::QueryIgnored, xcs, 1, 2});
    // session scope
    add({"session-bound", NonceMode::SessionBound, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::None, none, 1, 3});
    add({"session-bound-miss", NonceMode::SessionBound, 22, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::None, xcache, 1, 1});
    // length and validity findings
    add({"short-nonce", NonceMode::FreshPerRequest, 8, NonceAlphabet::Base64Url,
         CspDelivery::Header, SimCacheMode::None, none, 1, 2});
    add({"invalid-nonce", NonceMode::FreshPerRequest, 22, NonceAlphabet::WithInvalidChar,
         CspDelivery::Header, SimCacheMode::None, none, 1, 2});
    // delivery variants
    add({"meta-delivery", NonceMode::StaticGlobal, 22, NonceAlphabet::Base64Url,
         CspDelivery::Meta, SimCacheMode::None, none, 1, 2});
    add({"both-delivery", NonceMode::FreshPerRequest, 22, NonceAlphabet::Base64Url,
         CspDelivery::Both, SimCacheMode::None, none, 1, 2});
    add({"report-only", NonceMode::FreshPerRequest, 22, NonceAlphabet::Base64Url,
         CspDelivery::ReportOnlyHeader, SimCacheMode::None, none, 1, 2});
    add({"meta-report-only", NonceMode::FreshPerRequest, 22, NonceAlphabet::Base64Url,
         CspDelivery::ReportOnlyMeta, SimCacheMode::None, none, 1, 2});
    return out;
}

}  // namespace nonce_audit
