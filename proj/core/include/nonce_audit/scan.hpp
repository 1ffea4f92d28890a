#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nonce_audit/classifier.hpp"
#include "nonce_audit/crawler.hpp"
#include "nonce_audit/reporting.hpp"

namespace nonce_audit {

struct ScanOptions {
    CrawlBudget budget;
    std::filesystem::path output_dir;
    std::optional<std::pair<std::string, int>> resolve;  // host override for simulators
    std::string user_agent = "nonce-audit/1.0 (CSP research scanner)";
    int probe_delay_ms = 0;
    bool store_bodies = true;
    std::string scheme = "https";
};

// Crawl one site, probe every page that presents a used nonce-based CSP,
// classify, and persist records + evidence. Pass a null output_dir (empty
// path) to skip persistence.
SiteReport scan_site(const SiteTarget& target, const ScanOptions& options);

struct ScanRun {
    std::vector<SiteReport> reports;
    RunSummary summary;
};

// Full run over a target list: per-site records, summary.json and
// histogram.csv in the output directory.
ScanRun scan_targets(const std::vector<SiteTarget>& targets, const ScanOptions& options);

// Tranco-style "rank,domain" CSV.
std::vector<SiteTarget> load_targets_csv(const std::filesystem::path& file,
                                         const std::string& scheme = "https");

}  // namespace nonce_audit
