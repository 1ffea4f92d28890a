#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nonce_audit/classifier.hpp"
#include "nonce_audit/probe.hpp"

namespace nonce_audit {

struct RunSummary {
    size_t total_sites = 0;
    size_t sites_using_csp = 0;
    size_t enforcement = 0;
    size_t report_only = 0;
    size_t nonce_sites = 0;
    size_t reuse_sites = 0;
    size_t cause_cache = 0;
    size_t cause_server = 0;
    size_t same_session = 0;
    size_t cross_session = 0;
    size_t cached_nonce_sites = 0;
    size_t short_nonce_sites = 0;
    size_t length8_sites = 0;
    size_t invalid_nonce_sites = 0;

    bool operator==(const RunSummary&) const = default;
};

// Half-up rounding to one decimal; 0.0 when the denominator is 0.
double percent(size_t numerator, size_t denominator);
std::string format_percent(size_t numerator, size_t denominator);

RunSummary summarize(const std::vector<SiteReport>& reports);
// Percentages are always recomputed from the counts here, never stored.
nlohmann::ordered_json summary_to_json(const RunSummary& summary);

struct RankHistogram {
    struct Bucket {
        size_t start = 0;  // inclusive, 1-based rank
        size_t end = 0;    // inclusive
        size_t nonce_sites = 0;
        size_t reusing_sites = 0;
    };
    size_t bucket_size = 5000;
    std::vector<Bucket> buckets;
    Bucket unranked;
};

RankHistogram rank_histogram(const std::vector<SiteReport>& reports, size_t bucket_size = 5000);
std::string histogram_to_csv(const RankHistogram& histogram);

std::string sha256_hex(std::string_view data);

nlohmann::ordered_json page_record_json(const PageResult& page);
PageResult page_record_from_json(const nlohmann::json& record);

// Append-only per-site record stream plus raw evidence transcripts.
class RecordWriter {
  public:
    // Throws std::runtime_error on storage failure: evidence integrity
    // beats partial results.
    RecordWriter(const std::filesystem::path& output_dir, const SiteTarget& target,
                 bool store_bodies = true);

    void write_page(const PageResult& page, const PageProbe* probe);
    void finish(const SiteReport& report);

  private:
    void write_evidence(const std::string& page_url, int probe_index,
                        const ProbeResponse& response);

    std::filesystem::path site_dir_;
    std::ofstream records_;
    bool store_bodies_;
};

// Rebuild site reports from the records.jsonl streams under output_dir.
std::vector<SiteReport> load_site_reports(const std::filesystem::path& output_dir);

}  // namespace nonce_audit
