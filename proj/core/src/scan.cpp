#include "nonce_audit/scan.hpp"

#include <cctype>
#include <fstream>
#include <map>

#include "nonce_audit/probe.hpp"
#include "nonce_audit/url.hpp"

namespace nonce_audit {

SiteReport scan_site(const SiteTarget& target, const ScanOptions& options) {
    SessionConfig session_config;
    session_config.user_agent = options.user_agent;
    session_config.timeout_secs = options.budget.request_timeout_secs;
    session_config.min_interval_ms = options.budget.min_request_interval_ms;
    session_config.resolve = options.resolve;
    Session session(session_config);

    CrawlResult crawl = crawl_site(target, options.budget, session);

    // phase 2+3: probe every page that actually uses a nonce-based CSP
    std::vector<PageProbe> probes;
    std::vector<const CrawlPage*> probed_pages;
    SiteNonceContext site_context;
    for (const auto& page : crawl.pages) {
        if (!page.nonce_found) continue;
        probes.push_back(run_probe_sequence(page.url, session, options.probe_delay_ms));
        probed_pages.push_back(&page);
        site_context.add(page.url, probes.back().script_nonce_values(1));
    }

    std::vector<PageResult> results;
    std::map<std::string, const PageProbe*> probe_by_url;
    for (size_t i = 0; i < probes.size(); i++) {
        results.push_back(classify_page(probes[i], *probed_pages[i], site_context));
        probe_by_url[probes[i].url] = &probes[i];
    }
    for (const auto& page : crawl.pages) {
        if (page.nonce_found) continue;
        PageResult result;
        result.url = page.url;
        result.csp_found = page.csp_found;
        result.enforcement_seen = page.enforcement_seen;
        result.report_only_seen = page.report_only_seen;
        result.nonce_used = false;
        result.short_nonce = page.short_nonce;
        result.invalid_nonce = page.invalid_nonce;
        result.length8_nonce = page.length8_nonce;
        results.push_back(std::move(result));
    }

    SiteReport report = aggregate_site(results, target);
    report.crawl_failed = crawl.site_failed;

    if (!options.output_dir.empty()) {
        RecordWriter writer(options.output_dir, target, options.store_bodies);
        for (const auto& result : report.pages) {
            auto it = probe_by_url.find(result.url);
            writer.write_page(result, it == probe_by_url.end() ? nullptr : it->second);
        }
        writer.finish(report);
    }
    return report;
}

ScanRun scan_targets(const std::vector<SiteTarget>& targets, const ScanOptions& options) {
    ScanRun run;
    if (!options.output_dir.empty()) std::filesystem::create_directories(options.output_dir);
    for (const auto& target : targets) {
        run.reports.push_back(scan_site(target, options));
    }
    run.summary = summarize(run.reports);

    if (!options.output_dir.empty()) {
        std::ofstream summary_file(options.output_dir / "summary.json");
        summary_file << summary_to_json(run.summary).dump(2) << "\n";
        std::ofstream histogram_file(options.output_dir / "histogram.csv");
        histogram_file << histogram_to_csv(rank_histogram(run.reports));
    }
    return run;
}

std::vector<SiteTarget> load_targets_csv(const std::filesystem::path& file,
                                         const std::string& scheme) {
    std::vector<SiteTarget> targets;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
        std::string_view s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        auto comma = s.find(',');
        SiteTarget target;
        target.scheme = scheme;
        if (comma == std::string_view::npos) {
            target.registrable_domain = to_lower(s);
        } else {
            std::string_view rank_s = trim(s.substr(0, comma));
            size_t rank = 0;
            bool numeric = !rank_s.empty();
            for (char c : rank_s) {
                if (!std::isdigit(static_cast<unsigned char>(c))) {
                    numeric = false;
                    break;
                }
                rank = rank * 10 + (c - '0');
            }
            if (numeric && rank > 0) target.rank = rank;
            target.registrable_domain = to_lower(trim(s.substr(comma + 1)));
        }
        if (!target.registrable_domain.empty()) targets.push_back(std::move(target));
    }
    return targets;
}

}  // namespace nonce_audit
