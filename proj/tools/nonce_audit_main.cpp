// nonce-audit: crawl sites, detect nonce-based CSPs, and classify nonce
// misuse (reuse, cause, session scope, length, validity).

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "nonce_audit/reporting.hpp"
#include "nonce_audit/scan.hpp"
#include "nonce_audit/simulator.hpp"

namespace fs = std::filesystem;
using namespace nonce_audit;

namespace {

int run_scan(const std::string& targets_csv, const std::string& single_domain,
             const ScanOptions& options) {
    std::vector<SiteTarget> targets;
    if (!single_domain.empty()) {
        SiteTarget target;
        target.registrable_domain = to_lower(single_domain);
        target.scheme = options.scheme;
        targets.push_back(std::move(target));
    } else {
        targets = load_targets_csv(targets_csv, options.scheme);
        if (targets.empty()) {
            std::cerr << "no targets found in " << targets_csv << "\n";
            return 1;
        }
    }

    fs::create_directories(options.output_dir);
    ScanRun run = scan_targets(targets, options);

    for (const auto& report : run.reports) {
        std::cout << report.target.registrable_domain << ": ";
        if (report.crawl_failed) {
            std::cout << "unreachable\n";
            continue;
        }
        std::cout << (report.uses_csp ? "csp" : "no-csp");
        if (report.uses_nonce) std::cout << " nonce";
        if (report.reuses_nonce) {
            std::cout << " REUSE cause=" << cause_name(*report.cause) << "/"
                      << confidence_name(*report.cause_confidence);
            if (report.session_scope) std::cout << " scope=" << scope_name(*report.session_scope);
        }
        if (report.cached_nonce_observed) std::cout << " cached";
        if (report.short_nonce) std::cout << " short";
        if (report.invalid_nonce) std::cout << " invalid";
        std::cout << "\n";
    }
    std::cout << "\n" << summary_to_json(run.summary).dump(2) << "\n";
    std::cout << "results written to " << options.output_dir.string() << "\n";
    return 0;
}

int run_summarize(const fs::path& output_dir) {
    auto reports = load_site_reports(output_dir);
    if (reports.empty()) {
        std::cerr << "no records found under " << output_dir.string() << "\n";
        return 1;
    }
    auto summary_json = summary_to_json(summarize(reports));
    std::ofstream out(output_dir / "summary.json");
    out << summary_json.dump(2) << "\n";
    std::cout << summary_json.dump(2) << "\n";
    return 0;
}

int run_histogram(const fs::path& output_dir) {
    auto reports = load_site_reports(output_dir);
    if (reports.empty()) {
        std::cerr << "no records found under " << output_dir.string() << "\n";
        return 1;
    }
    std::string csv = histogram_to_csv(rank_histogram(reports));
    std::ofstream out(output_dir / "histogram.csv");
    out << csv;
    std::cout << csv;
    return 0;
}

int run_simulate(const std::string& config_file, int port) {
    std::vector<Scenario> scenarios;
    if (config_file.empty()) {
        scenarios = default_scenarios();
    } else {
        auto parsed = load_scenarios(config_file);
        if (!parsed.ok()) {
            std::cerr << "scenario config error: " << parsed.error << "\n";
            return 1;
        }
        scenarios = std::move(parsed.scenarios);
    }

    Simulator simulator(std::move(scenarios));
    if (!simulator.start(port)) {
        std::cerr << "cannot bind port " << port << "\n";
        return 1;
    }
    std::cout << "simulator listening on 127.0.0.1:" << simulator.port() << "\n";
    for (const auto& scenario : simulator.scenarios()) {
        std::cout << "  " << scenario.apex_host() << "  (" << scenario.subdomains << "x"
                  << scenario.pages << ")\n";
    }
    std::cout << "request log at /__log__; scan with --resolve 127.0.0.1:"
              << simulator.port() << " --http\n";

    static std::sig_atomic_t stop_requested = 0;
    std::signal(SIGINT, [](int) { stop_requested = 1; });
    std::signal(SIGTERM, [](int) { stop_requested = 1; });
    while (!stop_requested) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    simulator.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSP nonce misuse auditor"};
    app.require_subcommand(1);

    // scan
    auto* scan = app.add_subcommand("scan", "crawl targets and classify nonce misuse");
    std::string targets_csv;
    std::string domain;
    std::string resolve_spec;
    bool use_http = false;
    bool ignore_robots = false;
    bool no_bodies = false;
    ScanOptions options;
    scan->add_option("--targets", targets_csv, "target list CSV (rank,domain)");
    scan->add_option("--domain", domain, "single registrable domain to scan");
    scan->add_option("--max-subdomains", options.budget.max_subdomains,
                     "subdomain budget per site")
        ->check(CLI::PositiveNumber);
    scan->add_option("--max-pages", options.budget.max_pages_per_subdomain,
                     "page budget per subdomain")
        ->check(CLI::PositiveNumber);
    scan->add_option("--timeout-secs", options.budget.request_timeout_secs, "request timeout");
    scan->add_option("--interval-ms", options.budget.min_request_interval_ms,
                     "minimum delay between requests to one site");
    scan->add_flag("--ignore-robots", ignore_robots, "do not honor robots.txt");
    scan->add_option("--output", options.output_dir, "output directory")->required();
    scan->add_option("--probe-delay-ms", options.probe_delay_ms,
                     "extra delay between probe requests");
    scan->add_option("--user-agent", options.user_agent, "User-Agent header");
    scan->add_flag("--no-bodies", no_bodies, "store body hashes instead of bodies");
    scan->add_flag("--http", use_http, "use http instead of https (simulator targets)");
    scan->add_option("--resolve", resolve_spec,
                     "send every request to this ip:port, keeping the Host header");

    // summarize / histogram
    auto* summarize_cmd = app.add_subcommand("summarize", "recompute summary.json from records");
    std::string summarize_dir;
    summarize_cmd->add_option("output_dir", summarize_dir)->required();
    auto* histogram_cmd = app.add_subcommand("histogram", "recompute histogram.csv from records");
    std::string histogram_dir;
    histogram_cmd->add_option("output_dir", histogram_dir)->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run the scenario target simulator");
    std::string sim_config;
    int sim_port = 8470;
    simulate->add_option("--config", sim_config, "scenario file (JSON); default matrix if omitted");
    simulate->add_option("--port", sim_port, "listen port");

    CLI11_PARSE(app, argc, argv);

    if (scan->parsed()) {
        if (targets_csv.empty() == domain.empty()) {
            std::cerr << "pass exactly one of --targets or --domain\n";
            return 1;
        }
        options.budget.honor_robots = !ignore_robots;
        options.store_bodies = !no_bodies;
        options.scheme = use_http ? "http" : "https";
        if (!resolve_spec.empty()) {
            auto colon = resolve_spec.rfind(':');
            if (colon == std::string::npos) {
                std::cerr << "--resolve expects ip:port\n";
                return 1;
            }
            options.resolve = {resolve_spec.substr(0, colon),
                               std::stoi(resolve_spec.substr(colon + 1))};
        }
        return run_scan(targets_csv, domain, options);
    }
    if (summarize_cmd->parsed()) return run_summarize(summarize_dir);
    if (histogram_cmd->parsed()) return run_histogram(histogram_dir);
    if (simulate->parsed()) return run_simulate(sim_config, sim_port);
    return 0;
}
