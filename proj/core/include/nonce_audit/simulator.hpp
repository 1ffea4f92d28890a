#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "nonce_audit/classifier.hpp"

namespace nonce_audit {

enum class NonceMode { FreshPerRequest, StaticGlobal, SessionBound, FreshButCached };
enum class NonceAlphabet { Base64Url, WithInvalidChar };
enum class CspDelivery { Header, Meta, Both, ReportOnlyHeader, ReportOnlyMeta };
enum class SimCacheMode { None, QueryInKey, QueryIgnored };

struct CacheHeaderSpec {
    std::string name;  // empty = no cache status header emitted
    std::string hit_value = "HIT";
    std::string miss_value = "MISS";
};

struct ExpectedLabels {
    bool uses_csp = false;
    bool uses_nonce = false;
    bool reuse = false;
    std::optional<Cause> cause;
    std::optional<Confidence> confidence;
    bool cached_observed = false;
    std::optional<Scope> scope;
    bool short_nonce = false;
    bool invalid_nonce = false;
};

struct Scenario {
    std::string name;
    NonceMode mode = NonceMode::FreshPerRequest;
    int nonce_length = 22;
    NonceAlphabet alphabet = NonceAlphabet::Base64Url;
    CspDelivery delivery = CspDelivery::Header;
    SimCacheMode cache = SimCacheMode::None;
    CacheHeaderSpec cache_header;
    int subdomains = 1;  // the apex host counts as the first one
    int pages = 2;       // per subdomain, homepage included

    std::string apex_host() const { return name + ".test"; }
};

// The ground-truth oracle: what the classifier must report for a scan of
// this scenario.
ExpectedLabels ground_truth(const Scenario& scenario);

// Scenario file parsing; returns an error message on invalid or
// internally inconsistent entries.
struct ScenarioParseResult {
    std::vector<Scenario> scenarios;
    std::string error;
    bool ok() const { return error.empty(); }
};
ScenarioParseResult parse_scenarios(const nlohmann::json& config);
ScenarioParseResult load_scenarios(const std::filesystem::path& file);

// A matrix covering every classifier rule, both session scopes, and the
// length/validity findings.
std::vector<Scenario> default_scenarios();

struct RequestLogEntry {
    std::string method;
    std::string host;
    std::string target;  // path + query
    bool has_cookie = false;
};

// Local origins plus an optional in-front cache, scenario per virtual
// host; ground truth provider for acceptance tests.
class Simulator {
  public:
    explicit Simulator(std::vector<Scenario> scenarios);
    ~Simulator();

    bool start(int port);         // false when the port cannot be bound
    bool start_any_port();        // pick a free port
    void stop();
    int port() const { return port_; }

    std::vector<RequestLogEntry> request_log() const;
    const std::vector<Scenario>& scenarios() const { return scenarios_; }
    const Scenario* find_scenario(const std::string& host) const;

  private:
    void install_routes();

    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::vector<Scenario> scenarios_;
    int port_ = 0;
};

}  // namespace nonce_audit
