#include <benchmark/benchmark.h>

#include "nonce_audit/cache_heuristics.hpp"
#include "nonce_audit/csp.hpp"
#include "nonce_audit/html.hpp"

using namespace nonce_audit;

static void BM_ParsePolicy(benchmark::State& state) {
    std::string policy =
        "default-src 'self'; script-src 'nonce-cmFuZG9t' 'self' https://cdn.example "
        "'sha256-AbCdEf=='; style-src 'unsafe-inline'; img-src data: https:; "
        "frame-ancestors 'none'; report-uri /csp";
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            parse_policy(policy, Disposition::Enforce, Delivery::Header));
    }
}
BENCHMARK(BM_ParsePolicy);

static void BM_ClassifyResponse(benchmark::State& state) {
    HeaderList headers = {
        {"Content-Type", "text/html"},
        {"Server", "nginx"},
        {"Vary", "Accept-Encoding"},
        {"X-Cache", "HIT from edge-fra1"},
        {"Age", "118"},
    };
    for (auto _ : state) {
        benchmark::DoNotOptimize(classify_response(headers));
    }
}
BENCHMARK(BM_ClassifyResponse);

static void BM_ExtractLinks(benchmark::State& state) {
    std::string html = "<html><body>";
    for (int i = 0; i < 200; i++) {
        html += "<p>filler <a href=\"/page/" + std::to_string(i) + "?x=1\">l</a></p>";
    }
    html += "<script>var s = \"<a href='/not-a-link'>\";</script></body></html>";
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_links(html, "https://example.com/index"));
    }
}
BENCHMARK(BM_ExtractLinks);

BENCHMARK_MAIN();
