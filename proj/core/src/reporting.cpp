#include "nonce_audit/reporting.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace nonce_audit {

using nlohmann::json;
using nlohmann::ordered_json;

double percent(size_t numerator, size_t denominator) {
    if (denominator == 0) return 0.0;
    double p = 100.0 * static_cast<double>(numerator) / static_cast<double>(denominator);
    return std::floor(p * 10.0 + 0.5) / 10.0;
}

std::string format_percent(size_t numerator, size_t denominator) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", percent(numerator, denominator));
    return buf;
}

RunSummary summarize(const std::vector<SiteReport>& reports) {
    RunSummary s;
    s.total_sites = reports.size();
    for (const auto& r : reports) {
        if (r.uses_csp) {
            s.sites_using_csp++;
            // a site with both postures counts under enforcement
            if (r.enforcement_seen) {
                s.enforcement++;
            } else if (r.report_only_seen) {
                s.report_only++;
            }
        }
        if (r.uses_nonce) s.nonce_sites++;
        if (r.reuses_nonce) {
            s.reuse_sites++;
            if (r.cause == Cause::Cache) {
                s.cause_cache++;
            } else {
                s.cause_server++;
            }
            if (r.session_scope == Scope::SameSessionOnly) s.same_session++;
            if (r.session_scope == Scope::CrossSession) s.cross_session++;
            if (r.cached_nonce_observed) s.cached_nonce_sites++;
        }
        if (r.uses_nonce && r.short_nonce) s.short_nonce_sites++;
        if (r.uses_nonce && r.length8_nonce) s.length8_sites++;
        if (r.uses_nonce && r.invalid_nonce) s.invalid_nonce_sites++;
    }
    return s;
}

ordered_json summary_to_json(const RunSummary& s) {
    ordered_json j;
    j["total_sites"] = s.total_sites;
    j["csp"] = {
        {"sites_using_csp", s.sites_using_csp},
        {"enforcement", s.enforcement},
        {"enforcement_pct", format_percent(s.enforcement, s.sites_using_csp)},
        {"report_only", s.report_only},
        {"report_only_pct", format_percent(s.report_only, s.sites_using_csp)},
    };
    j["nonces"] = {
        {"nonce_sites", s.nonce_sites},
        {"nonce_sites_pct_of_csp", format_percent(s.nonce_sites, s.sites_using_csp)},
        {"reuse_sites", s.reuse_sites},
        {"reuse_sites_pct_of_csp", format_percent(s.reuse_sites, s.sites_using_csp)},
        {"reuse_sites_pct_of_nonce", format_percent(s.reuse_sites, s.nonce_sites)},
    };
    j["reuse_causes"] = {
        {"cache", s.cause_cache},
        {"cache_pct", format_percent(s.cause_cache, s.reuse_sites)},
        {"server_side", s.cause_server},
        {"server_side_pct", format_percent(s.cause_server, s.reuse_sites)},
        {"cached_nonce_sites", s.cached_nonce_sites},
        {"cached_nonce_pct", format_percent(s.cached_nonce_sites, s.reuse_sites)},
    };
    j["sessions"] = {
        {"same_session", s.same_session},
        {"same_session_pct", format_percent(s.same_session, s.reuse_sites)},
        {"cross_session", s.cross_session},
        {"cross_session_pct", format_percent(s.cross_session, s.reuse_sites)},
    };
    j["length_validity"] = {
        {"short_nonce_sites", s.short_nonce_sites},
        {"short_nonce_pct_of_nonce", format_percent(s.short_nonce_sites, s.nonce_sites)},
        {"length8_sites", s.length8_sites},
        {"length8_pct_of_nonce", format_percent(s.length8_sites, s.nonce_sites)},
        {"invalid_nonce_sites", s.invalid_nonce_sites},
    };
    return j;
}

RankHistogram rank_histogram(const std::vector<SiteReport>& reports, size_t bucket_size) {
    RankHistogram h;
    h.bucket_size = bucket_size;
    for (const auto& r : reports) {
        if (!r.uses_nonce) continue;
        if (!r.target.rank) {
            h.unranked.nonce_sites++;
            if (r.reuses_nonce) h.unranked.reusing_sites++;
            continue;
        }
        size_t index = (*r.target.rank - 1) / bucket_size;
        if (h.buckets.size() <= index) {
            size_t old = h.buckets.size();
            h.buckets.resize(index + 1);
            for (size_t i = old; i <= index; i++) {
                h.buckets[i].start = i * bucket_size + 1;
                h.buckets[i].end = (i + 1) * bucket_size;
            }
        }
        h.buckets[index].nonce_sites++;
        if (r.reuses_nonce) h.buckets[index].reusing_sites++;
    }
    return h;
}

std::string histogram_to_csv(const RankHistogram& h) {
    std::string out = "bucket_start,bucket_end,nonce_sites,reusing_sites,reuse_pct\n";
    for (const auto& b : h.buckets) {
        out += std::to_string(b.start) + "," + std::to_string(b.end) + "," +
               std::to_string(b.nonce_sites) + "," + std::to_string(b.reusing_sites) + "," +
               format_percent(b.reusing_sites, b.nonce_sites) + "\n";
    }
    if (h.unranked.nonce_sites > 0) {
        out += "unranked,unranked," + std::to_string(h.unranked.nonce_sites) + "," +
               std::to_string(h.unranked.reusing_sites) + "," +
               format_percent(h.unranked.reusing_sites, h.unranked.nonce_sites) + "\n";
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; i++) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

ordered_json page_record_json(const PageResult& page) {
    ordered_json j;
    j["type"] = "page";
    j["url"] = page.url;
    j["csp_found"] = page.csp_found;
    j["enforcement_seen"] = page.enforcement_seen;
    j["report_only_seen"] = page.report_only_seen;
    j["nonce_used"] = page.nonce_used;
    j["reuse"] = reuse_name(page.reuse);
    j["cause"] = page.cause ? json(cause_name(*page.cause)) : json(nullptr);
    j["cause_confidence"] =
        page.cause_confidence ? json(confidence_name(*page.cause_confidence)) : json(nullptr);
    j["cause_rule"] = page.cause_rule;
    j["cached_nonce_observed"] = page.cached_nonce_observed;
    j["session_scope"] =
        page.session_scope ? json(scope_name(*page.session_scope)) : json(nullptr);
    j["short_nonce"] = page.short_nonce;
    j["invalid_nonce"] = page.invalid_nonce;
    j["length8_nonce"] = page.length8_nonce;
    j["probed"] = page.probed;
    j["errors"] = page.errors;
    return j;
}

PageResult page_record_from_json(const json& j) {
    PageResult page;
    page.url = j.at("url").get<std::string>();
    page.csp_found = j.at("csp_found").get<bool>();
    page.enforcement_seen = j.at("enforcement_seen").get<bool>();
    page.report_only_seen = j.at("report_only_seen").get<bool>();
    page.nonce_used = j.at("nonce_used").get<bool>();
    std::string reuse = j.at("reuse").get<std::string>();
    page.reuse = reuse == "yes" ? ReuseFlag::Yes
                                : (reuse == "no" ? ReuseFlag::No : ReuseFlag::Unknown);
    if (!j.at("cause").is_null()) {
        page.cause = j["cause"].get<std::string>() == "cache" ? Cause::Cache : Cause::ServerSide;
    }
    if (!j.at("cause_confidence").is_null()) {
        page.cause_confidence = j["cause_confidence"].get<std::string>() == "conclusive"
                                    ? Confidence::Conclusive
                                    : Confidence::Probable;
    }
    page.cause_rule = j.at("cause_rule").get<int>();
    page.cached_nonce_observed = j.at("cached_nonce_observed").get<bool>();
    if (!j.at("session_scope").is_null()) {
        std::string scope = j["session_scope"].get<std::string>();
        page.session_scope = scope == "cross_session"
                                 ? Scope::CrossSession
                                 : (scope == "same_session_only" ? Scope::SameSessionOnly
                                                                 : Scope::Unknown);
    }
    page.short_nonce = j.at("short_nonce").get<bool>();
    page.invalid_nonce = j.at("invalid_nonce").get<bool>();
    page.length8_nonce = j.at("length8_nonce").get<bool>();
    page.probed = j.at("probed").get<bool>();
    page.errors = j.at("errors").get<std::vector<std::string>>();
    return page;
}

RecordWriter::RecordWriter(const std::filesystem::path& output_dir, const SiteTarget& target,
                           bool store_bodies)
    : site_dir_(output_dir / target.registrable_domain), store_bodies_(store_bodies) {
    std::error_code ec;
    std::filesystem::create_directories(site_dir_ / "evidence", ec);
    if (ec) throw std::runtime_error("cannot create " + site_dir_.string() + ": " + ec.message());
    records_.open(site_dir_ / "records.jsonl", std::ios::app);
    if (!records_) throw std::runtime_error("cannot open records.jsonl in " + site_dir_.string());

    ordered_json j;
    j["type"] = "site";
    j["domain"] = target.registrable_domain;
    j["rank"] = target.rank ? json(*target.rank) : json(nullptr);
    j["scheme"] = target.scheme;
    records_ << j.dump() << "\n";
    if (!records_) throw std::runtime_error("write failure in " + site_dir_.string());
}

void RecordWriter::write_evidence(const std::string& page_url, int probe_index,
                                  const ProbeResponse& response) {
    auto path = site_dir_ / "evidence" /
                (sha256_hex(page_url) + "_" + std::to_string(probe_index) + ".http");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open evidence file " + path.string());
    out << "HTTP/1.1 " << response.status << " " << response.reason << "\r\n";
    for (const auto& [name, value] : response.headers) {
        out << name << ": " << value << "\r\n";
    }
    out << "\r\n";
    if (store_bodies_) {
        out << response.body;
    } else {
        out << "sha256:" << sha256_hex(response.body);
    }
    if (!out) throw std::runtime_error("write failure in " + path.string());
}

void RecordWriter::write_page(const PageResult& page, const PageProbe* probe) {
    if (probe) {
        const std::optional<ProbeResponse>* responses[] = {&probe->r1, &probe->r2, &probe->r3,
                                                           &probe->r4};
        for (int i = 0; i < 4; i++) {
            if (responses[i]->has_value()) write_evidence(page.url, i + 1, responses[i]->value());
        }
    }
    records_ << page_record_json(page).dump() << "\n";
    records_.flush();
    if (!records_) throw std::runtime_error("write failure in " + site_dir_.string());
}

void RecordWriter::finish(const SiteReport& report) {
    ordered_json j;
    j["type"] = "site_status";
    j["crawl_failed"] = report.crawl_failed;
    records_ << j.dump() << "\n";
    records_.flush();
    if (!records_) throw std::runtime_error("write failure in " + site_dir_.string());
}

std::vector<SiteReport> load_site_reports(const std::filesystem::path& output_dir) {
    std::vector<std::filesystem::path> record_files;
    if (std::filesystem::exists(output_dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(output_dir)) {
            if (!entry.is_directory()) continue;
            auto file = entry.path() / "records.jsonl";
            if (std::filesystem::exists(file)) record_files.push_back(file);
        }
    }
    std::sort(record_files.begin(), record_files.end());

    std::vector<SiteReport> reports;
    for (const auto& file : record_files) {
        std::ifstream in(file);
        SiteTarget target;
        std::vector<PageResult> pages;
        bool crawl_failed = false;
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            json j = json::parse(line);
            std::string type = j.at("type").get<std::string>();
            if (type == "site") {
                target.registrable_domain = j.at("domain").get<std::string>();
                if (!j.at("rank").is_null()) target.rank = j["rank"].get<size_t>();
                target.scheme = j.value("scheme", "https");
            } else if (type == "page") {
                pages.push_back(page_record_from_json(j));
            } else if (type == "site_status") {
                crawl_failed = j.at("crawl_failed").get<bool>();
            }
        }
        SiteReport report = aggregate_site(pages, target);
        report.crawl_failed = crawl_failed;
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace nonce_audit
