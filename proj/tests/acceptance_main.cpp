// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the process exits nonzero when any of them fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nonce_audit/cache_heuristics.hpp"
#include "nonce_audit/crawler.hpp"
#include "nonce_audit/csp.hpp"
#include "nonce_audit/nonce.hpp"
#include "nonce_audit/reporting.hpp"
#include "nonce_audit/scan.hpp"
#include "nonce_audit/simulator.hpp"
#include "nonce_audit/url.hpp"

using namespace nonce_audit;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void criterion(const std::string& name, const std::function<void(std::ostringstream&)>& body) {
    std::ostringstream detail;
    bool ok = true;
    try {
        body(detail);
    } catch (const std::exception& e) {
        detail << "exception: " << e.what() << "; ";
        ok = false;
    }
    if (!detail.str().empty()) ok = false;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
    if (!ok) {
        std::cout << "       " << detail.str() << "\n";
        failures++;
    }
}

template <typename T>
void expect(std::ostringstream& out, bool condition, const T& message) {
    if (!condition) out << message << "; ";
}

std::string opt_name(const std::optional<Cause>& c) {
    return c ? cause_name(*c) : "none";
}
std::string opt_name(const std::optional<Confidence>& c) {
    return c ? confidence_name(*c) : "none";
}
std::string opt_name(const std::optional<Scope>& s) {
    return s ? scope_name(*s) : "none";
}

// shared between the oracle-suite and evidence-integrity criteria
struct MatrixRun {
    bool ran = false;
    fs::path output_dir;
    RunSummary in_run_summary;
    std::string in_run_summary_json;
};
MatrixRun matrix;

}  // namespace

int main() {
    // --- classifier oracle suite over the full scenario matrix -----------
    criterion("scenario oracle suite: classifier labels match ground truth", [](auto& out) {
        auto started = std::chrono::steady_clock::now();

        auto scenarios = default_scenarios();
        expect(out, scenarios.size() >= 12,
               "matrix too small: " + std::to_string(scenarios.size()));

        Simulator sim(scenarios);
        if (!sim.start_any_port()) {
            out << "simulator failed to start; ";
            return;
        }

        matrix.output_dir = fs::temp_directory_path() / "nonce_audit_acceptance_run";
        fs::remove_all(matrix.output_dir);

        ScanOptions options;
        options.scheme = "http";
        options.resolve = {{"127.0.0.1", sim.port()}};
        options.budget.min_request_interval_ms = 0;
        options.budget.request_timeout_secs = 5.0;
        options.output_dir = matrix.output_dir;

        std::vector<SiteTarget> targets;
        for (size_t i = 0; i < scenarios.size(); i++) {
            targets.push_back({scenarios[i].apex_host(), i + 1, "http"});
        }
        ScanRun run = scan_targets(targets, options);
        sim.stop();

        matrix.ran = true;
        matrix.in_run_summary = run.summary;
        matrix.in_run_summary_json = summary_to_json(run.summary).dump(2);

        size_t probable_flagged = 0;
        for (size_t i = 0; i < scenarios.size(); i++) {
            const Scenario& s = scenarios[i];
            const SiteReport& r = run.reports[i];
            ExpectedLabels e = ground_truth(s);
            auto tag = [&](const std::string& what) { return s.name + ": " + what; };

            expect(out, !r.crawl_failed, tag("crawl failed"));
            expect(out, r.uses_csp == e.uses_csp, tag("uses_csp"));
            expect(out, r.uses_nonce == e.uses_nonce, tag("uses_nonce"));
            expect(out, r.reuses_nonce == e.reuse, tag("reuse"));
            expect(out, r.cause == e.cause,
                   tag("cause " + opt_name(r.cause) + " != " + opt_name(e.cause)));
            expect(out, r.cause_confidence == e.confidence,
                   tag("confidence " + opt_name(r.cause_confidence) + " != " +
                       opt_name(e.confidence)));
            expect(out, r.cached_nonce_observed == e.cached_observed, tag("cached_observed"));
            expect(out, r.session_scope == e.scope,
                   tag("scope " + opt_name(r.session_scope) + " != " + opt_name(e.scope)));
            expect(out, r.short_nonce == e.short_nonce, tag("short_nonce"));
            expect(out, r.invalid_nonce == e.invalid_nonce, tag("invalid_nonce"));
            if (e.confidence == Confidence::Probable) probable_flagged++;
        }
        expect(out, probable_flagged >= 1, "no ambiguous scenario in the matrix");

        auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
        expect(out, elapsed < 60, "suite took " + std::to_string(elapsed) + "s");
    });

    // --- aggregate arithmetic reproduces the reference percentages -------
    criterion("summary percentages: half-up rounding over reference counts", [](auto& out) {
        RunSummary s;
        s.total_sites = 44367;
        s.sites_using_csp = 10034;
        s.nonce_sites = 2271;
        s.reuse_sites = 598;
        s.cause_cache = 256;
        s.cause_server = 342;
        s.same_session = 37;
        s.cross_session = 561;
        auto j = summary_to_json(s);
        auto check = [&](const char* section, const char* key, const std::string& want) {
            std::string got = j[section][key].template get<std::string>();
            expect(out, got == want,
                   std::string(key) + " = " + got + ", want " + want);
        };
        check("nonces", "nonce_sites_pct_of_csp", "22.6");
        check("nonces", "reuse_sites_pct_of_csp", "6.0");
        check("reuse_causes", "cache_pct", "42.8");
        check("reuse_causes", "server_side_pct", "57.2");
        check("sessions", "same_session_pct", "6.2");
        check("sessions", "cross_session_pct", "93.8");
    });

    // --- inline-script admission under a nonce policy --------------------
    criterion("policy semantics: nonce match governs inline execution", [](auto& out) {
        Policy p = parse_policy("default-src 'self'; script-src 'nonce-cmFuZG9t' 'self';",
                                Disposition::Enforce, Delivery::Header);
        expect(out, allows_inline_script(p, std::string("cmFuZG9t")),
               "matching nonce must execute");
        expect(out, !allows_inline_script(p, std::nullopt), "missing nonce must block");
        expect(out, !allows_inline_script(p, std::string("cmFuZG9u")), "wrong nonce must block");
    });

    // --- length rule ------------------------------------------------------
    criterion("length rule: under 22 useful characters is short", [](auto& out) {
        auto short_one = check_length("cmFuZG9t");
        expect(out, short_one && short_one->is_short && short_one->useful_chars == 8,
               "8-char value must be short");
        auto boundary = check_length("0123456789abcdefABCDEF");
        expect(out, boundary && !boundary->is_short && boundary->useful_chars == 22,
               "22 unpadded chars must not be short");
        auto padded = check_length("0123456789abcdefABCDEF==");
        expect(out, padded && padded->useful_chars == 22 && !padded->is_short,
               "trailing padding must not count toward the length");
    });

    // --- validity rule ----------------------------------------------------
    criterion("validity rule: only the base64/base64url union is legal", [](auto& out) {
        auto bad = check_validity("nonce$with%junk");
        expect(out, !bad.is_valid, "characters outside both alphabets must be flagged");
        expect(out, bad.offending_chars.count('$') == 1 && bad.offending_chars.count('%') == 1,
               "offending characters must be reported");

        static const char alphabet[] =
            "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
        std::mt19937 rng(99);
        std::uniform_int_distribution<int> pick(0, 63);
        std::uniform_int_distribution<int> len(1, 64);
        for (int i = 0; i < 1000; i++) {
            std::string value;
            for (int n = len(rng), j = 0; j < n; j++) value += alphabet[pick(rng)];
            if (!check_validity(value).is_valid) {
                out << "pure base64url value flagged: " << value << "; ";
                return;
            }
        }
    });

    // --- cache-header heuristics over a fixed corpus ----------------------
    criterion("cache heuristics: deterministic verdicts over a 30-header corpus",
              [](auto& out) {
        struct Case {
            HeaderList headers;
            CacheStatus want;
        };
        std::vector<Case> corpus = {
            {{{"x-cache", "HIT"}}, CacheStatus::Hit},
            {{{"x-cache", "MISS"}}, CacheStatus::Miss},
            {{{"x-cache", "HIT from cloudfront"}}, CacheStatus::Hit},
            {{{"x-cache", "Miss from cloudfront"}}, CacheStatus::Miss},
            {{{"x-cache-status", "HIT"}}, CacheStatus::Hit},
            {{{"x-cache-status", "EXPIRED"}}, CacheStatus::Miss},
            {{{"cf-cache-status", "HIT"}}, CacheStatus::Hit},
            {{{"cf-cache-status", "DYNAMIC"}}, CacheStatus::Miss},
            {{{"cf-cache-status", "BYPASS"}}, CacheStatus::Miss},
            {{{"cdn-cache", "HIT"}}, CacheStatus::Hit},
            {{{"x-proxy-cache", "MISS"}}, CacheStatus::Miss},
            {{{"x-cache-lookup", "HIT from proxy:8080"}}, CacheStatus::Hit},
            {{{"cache-status", "edge; hit"}}, CacheStatus::Hit},
            {{{"cache-status", "edge; fwd=miss"}}, CacheStatus::Miss},
            {{{"x-cache-hits", "4"}}, CacheStatus::Hit},
            {{{"x-cache-hits", "0"}}, CacheStatus::Unknown},
            {{{"x-edge-cache", "WHITELIST"}}, CacheStatus::Unknown},
            {{{"x-custom-cache", "served as a HIT"}}, CacheStatus::Hit},
            {{{"my-cache-layer", "miss"}}, CacheStatus::Miss},
            {{{"pragma", "HIT"}}, CacheStatus::Unknown},
            {{{"server", "nginx"}}, CacheStatus::Unknown},
            {{{"age", "0"}}, CacheStatus::Unknown},
            {{{"age", "1"}}, CacheStatus::Hit},
            {{{"age", "86400"}}, CacheStatus::Hit},
            {{{"age", "soon"}}, CacheStatus::Unknown},
            {{}, CacheStatus::Unknown},
            {{{"x-cache", "HIT"}, {"age", "0"}}, CacheStatus::Hit},
            {{{"age", "30"}, {"x-cache", "MISS"}}, CacheStatus::Miss},
            {{{"content-type", "text/html"}, {"x-varnish-cache", "HIT"}}, CacheStatus::Hit},
            {{{"x-cachetier", "HITCOUNT"}}, CacheStatus::Unknown},
        };
        expect(out, corpus.size() == 30, "corpus must hold 30 cases");

        for (size_t i = 0; i < corpus.size(); i++) {
            CacheVerdict first = classify_response(corpus[i].headers);
            expect(out, first.status == corpus[i].want,
                   "case " + std::to_string(i) + " wrong verdict");
            for (int rep = 0; rep < 3; rep++) {
                CacheVerdict again = classify_response(corpus[i].headers);
                expect(out,
                       again.status == first.status && again.rule == first.rule &&
                           again.evidence == first.evidence,
                       "case " + std::to_string(i) + " not deterministic");
            }
        }
    });

    // --- crawl budgets on an oversized topology ---------------------------
    criterion("crawler budget: 15x20 topology capped at 10 subdomains x 10 pages",
              [](auto& out) {
        Scenario big;
        big.name = "budget";
        big.mode = NonceMode::FreshPerRequest;
        big.subdomains = 15;
        big.pages = 20;

        Simulator sim({big});
        if (!sim.start_any_port()) {
            out << "simulator failed to start; ";
            return;
        }
        SessionConfig config;
        config.min_interval_ms = 0;
        config.timeout_secs = 5.0;
        config.resolve = {{"127.0.0.1", sim.port()}};
        Session session(config);

        CrawlBudget budget;  // defaults: 10 subdomains, 10 pages each
        budget.min_request_interval_ms = 0;
        CrawlResult result = crawl_site({"budget.test", 1, "http"}, budget, session);
        sim.stop();

        std::map<std::string, size_t> per_host;
        for (const auto& page : result.pages) {
            auto u = parse_url(page.url);
            expect(out, u.has_value(), "unparseable page url " + page.url);
            if (u) per_host[u->host]++;
            expect(out, is_internal(page.url, "budget.test"),
                   "external page crawled: " + page.url);
        }
        expect(out, per_host.size() == 10,
               "visited " + std::to_string(per_host.size()) + " subdomains, want 10");
        for (const auto& [host, count] : per_host) {
            expect(out, count <= 10,
                   host + " got " + std::to_string(count) + " pages, cap is 10");
        }
    });

    // --- persisted records reproduce the in-run summary -------------------
    criterion("evidence integrity: reloaded records reproduce the summary byte-for-byte",
              [](auto& out) {
        expect(out, matrix.ran, "scenario matrix run unavailable");
        if (!matrix.ran) return;

        auto reloaded = load_site_reports(matrix.output_dir);
        RunSummary recomputed = summarize(reloaded);
        expect(out, recomputed == matrix.in_run_summary,
               "recomputed counters differ from the in-run summary");
        expect(out, summary_to_json(recomputed).dump(2) == matrix.in_run_summary_json,
               "serialized summaries differ");

        std::ifstream file(matrix.output_dir / "summary.json");
        std::stringstream persisted;
        persisted << file.rdbuf();
        expect(out, persisted.str() == matrix.in_run_summary_json + "\n",
               "summary.json on disk differs from the in-run summary");

        fs::remove_all(matrix.output_dir);
    });

    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
