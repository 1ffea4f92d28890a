#include <doctest.h>

#include <atomic>
#include <regex>
#include <set>
#include <thread>

#include <httplib.h>

#include "nonce_audit/classifier.hpp"
#include "nonce_audit/crawler.hpp"
#include "nonce_audit/probe.hpp"
#include "nonce_audit/simulator.hpp"
#include "nonce_audit/url.hpp"

using namespace nonce_audit;

namespace {

Session local_session(int port) {
    SessionConfig config;
    config.min_interval_ms = 0;
    config.timeout_secs = 5.0;
    config.resolve = {{"127.0.0.1", port}};
    return Session(config);
}

Scenario scenario(const std::string& name, NonceMode mode, int subdomains = 1, int pages = 2,
                  SimCacheMode cache = SimCacheMode::None, CacheHeaderSpec header = {}) {
    Scenario s;
    s.name = name;
    s.mode = mode;
    s.subdomains = subdomains;
    s.pages = pages;
    s.cache = cache;
    s.cache_header = std::move(header);
    return s;
}

}  // namespace

TEST_CASE("add_cache_buster appends one well-formed parameter") {
    std::regex suffix("[?&]cb[0-9a-f]{8}=[0-9a-f]{16}$");

    std::string plain = add_cache_buster("http://h.test/p");
    CHECK(std::regex_search(plain, suffix));
    CHECK(plain.find("/p?cb") != std::string::npos);

    std::string with_query = add_cache_buster("http://h.test/p?a=1");
    CHECK(std::regex_search(with_query, suffix));
    CHECK(with_query.find("?a=1&cb") != std::string::npos);

    std::set<std::string> seen;
    for (int i = 0; i < 100; i++) seen.insert(add_cache_buster("http://h.test/"));
    CHECK(seen.size() == 100);
}

TEST_CASE("cookie jar scopes host-only and domain cookies") {
    CookieJar jar;
    jar.store("a.ex.com", "sid=1; Path=/");
    CHECK(jar.header_for("a.ex.com") == "sid=1");
    CHECK(jar.header_for("b.ex.com").empty());

    jar.store("a.ex.com", "shared=2; Domain=ex.com");
    CHECK(jar.header_for("b.ex.com") == "shared=2");
    CHECK(jar.header_for("a.ex.com") == "sid=1; shared=2");
    CHECK(jar.header_for("notex.com").empty());

    jar.store("a.ex.com", "sid=3");  // same name and host replaces
    CHECK(jar.header_for("a.ex.com") == "sid=3; shared=2");
}

TEST_CASE("probe sequence stops after two requests without reuse") {
    Simulator sim({scenario("fresh", NonceMode::FreshPerRequest)});
    REQUIRE(sim.start_any_port());
    Session session = local_session(sim.port());

    PageProbe probe = run_probe_sequence("http://fresh.test/", session);
    REQUIRE(probe.r1.has_value());
    REQUIRE(probe.r2.has_value());
    CHECK_FALSE(probe.r3.has_value());
    CHECK_FALSE(probe.r4.has_value());
    CHECK_FALSE(probe.error.has_value());
    CHECK(detect_reuse(probe) == ReuseFlag::No);
    sim.stop();
}

TEST_CASE("probe sequence escalates on reuse and skips cookies on r4") {
    Simulator sim({scenario("stat", NonceMode::StaticGlobal)});
    REQUIRE(sim.start_any_port());
    Session session = local_session(sim.port());

    PageProbe probe = run_probe_sequence("http://stat.test/", session);
    REQUIRE(probe.r3.has_value());
    REQUIRE(probe.r4.has_value());
    CHECK(detect_reuse(probe) == ReuseFlag::Yes);
    CHECK(probe.r3_url.find("http://stat.test/?cb") == 0);

    auto log = sim.request_log();
    REQUIRE(log.size() == 4);
    CHECK_FALSE(log[0].has_cookie);
    CHECK(log[1].has_cookie);
    CHECK(log[2].has_cookie);
    CHECK(log[2].target.find("?cb") != std::string::npos);  // cache buster went on the wire
    CHECK_FALSE(log[3].has_cookie);
    CHECK(log[3].target == "/");

    // static nonce survives the cookie-free fetch: cross-session
    CHECK(classify_session_scope(probe).scope == Scope::CrossSession);
    sim.stop();
}

TEST_CASE("probe treats error statuses as probe failures") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Get("/", [&](const httplib::Request&, httplib::Response& res) {
        if (++hits == 1) {
            res.set_header("Content-Security-Policy",
                           "script-src 'nonce-AAAABBBBCCCCDDDDEEEEFF'");
            res.set_content("<script nonce=\"AAAABBBBCCCCDDDDEEEEFF\">1</script>", "text/html");
        } else {
            res.status = 500;
            res.set_content("boom", "text/plain");
        }
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&]() { server.listen_after_bind(); });
    server.wait_until_ready();

    Session session = local_session(port);
    PageProbe probe = run_probe_sequence("http://h.test/", session);
    REQUIRE(probe.error.has_value());
    CHECK(probe.error_at == 2);
    CHECK_FALSE(probe.r3.has_value());
    CHECK_FALSE(probe.r4.has_value());
    CHECK(detect_reuse(probe) == ReuseFlag::Unknown);

    server.stop();
    t.join();
}

TEST_CASE("crawler visits the whole topology within generous budgets") {
    Simulator sim({scenario("multi", NonceMode::FreshPerRequest, 3, 2)});
    REQUIRE(sim.start_any_port());
    Session session = local_session(sim.port());

    SiteTarget target{"multi.test", 1, "http"};
    CrawlBudget budget;
    budget.min_request_interval_ms = 0;
    CrawlResult result = crawl_site(target, budget, session);
    CHECK_FALSE(result.site_failed);
    CHECK(result.pages.size() == 6);  // 3 hosts x 2 pages

    std::set<std::string> urls;
    for (const auto& page : result.pages) {
        CHECK(urls.insert(page.url).second);  // each page exactly once
        CHECK(is_internal(page.url, "multi.test"));
        CHECK(page.status == 200);
        CHECK(page.csp_found);
        CHECK(page.nonce_found);
    }
    // the external link was never requested
    for (const auto& entry : sim.request_log()) {
        CHECK(entry.host.ends_with("multi.test"));
    }
    sim.stop();
}

TEST_CASE("crawler stays inside subdomain and page budgets") {
    Simulator sim({scenario("big", NonceMode::FreshPerRequest, 5, 6)});
    REQUIRE(sim.start_any_port());
    Session session = local_session(sim.port());

    SiteTarget target{"big.test", 1, "http"};
    CrawlBudget budget;
    budget.max_subdomains = 2;
    budget.max_pages_per_subdomain = 3;
    budget.min_request_interval_ms = 0;
    CrawlResult result = crawl_site(target, budget, session);

    std::map<std::string, int> per_host;
    for (const auto& page : result.pages) {
        per_host[parse_url(page.url)->host]++;
    }
    CHECK(per_host.size() == 2);
    for (const auto& [host, count] : per_host) {
        CHECK(count <= 3);
    }
    sim.stop();
}

TEST_CASE("crawler falls back to http when https cannot connect") {
    Simulator sim({scenario("fall", NonceMode::FreshPerRequest, 1, 1)});
    REQUIRE(sim.start_any_port());
    Session session = local_session(sim.port());

    SiteTarget target{"fall.test", 1, "https"};  // the simulator is plain http
    CrawlBudget budget;
    budget.min_request_interval_ms = 0;
    CrawlResult result = crawl_site(target, budget, session);
    CHECK_FALSE(result.site_failed);
    REQUIRE(result.pages.size() == 1);
    CHECK(result.pages[0].url.find("http://") == 0);
    sim.stop();
}

TEST_CASE("crawler honors robots.txt disallow rules by default") {
    httplib::Server server;
    std::set<std::string> paths;
    std::mutex mutex;
    server.Get(".*", [&](const httplib::Request& req, httplib::Response& res) {
        {
            std::lock_guard lock(mutex);
            paths.insert(req.path);
        }
        if (req.path == "/robots.txt") {
            res.set_content("User-agent: *\nDisallow: /private\n", "text/plain");
        } else if (req.path == "/" || req.path == "/ok" || req.path == "/private") {
            res.set_content("<a href=\"/ok\">a</a><a href=\"/private\">b</a>", "text/html");
        } else {
            res.status = 404;
        }
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&]() { server.listen_after_bind(); });
    server.wait_until_ready();

    SiteTarget target{"robots.test", 1, "http"};
    CrawlBudget budget;
    budget.min_request_interval_ms = 0;

    {
        Session session = local_session(port);
        CrawlResult result = crawl_site(target, budget, session);
        CHECK(result.pages.size() == 2);  // homepage and /ok
        std::lock_guard lock(mutex);
        CHECK(!paths.contains("/private"));
    }

    {
        std::lock_guard lock(mutex);
        paths.clear();
    }
    budget.honor_robots = false;
    {
        Session session = local_session(port);
        CrawlResult result = crawl_site(target, budget, session);
        CHECK(result.pages.size() == 3);
        std::lock_guard lock(mutex);
        CHECK(paths.contains("/private"));
        CHECK(!paths.contains("/robots.txt"));
    }

    server.stop();
    t.join();
}

TEST_CASE("an unreachable homepage fails the site") {
    SessionConfig config;
    config.min_interval_ms = 0;
    config.timeout_secs = 1.0;
    config.resolve = {{"127.0.0.1", 1}};  // nothing listens there
    Session session(config);

    SiteTarget target{"dead.test", 1, "http"};
    CrawlBudget budget;
    budget.min_request_interval_ms = 0;
    CrawlResult result = crawl_site(target, budget, session);
    CHECK(result.site_failed);
    CHECK(result.pages.empty());
    CHECK(!result.errors.empty());
}
