#include <doctest.h>

#include <random>

#include "nonce_audit/csp.hpp"

using namespace nonce_audit;

namespace {

const char* kExamplePolicy = "default-src 'self'; script-src 'nonce-cmFuZG9t' 'self';";

std::string random_token(std::mt19937& rng) {
    static const char alphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
    std::uniform_int_distribution<int> len(8, 24);
    std::uniform_int_distribution<int> pick(0, sizeof(alphabet) - 2);
    std::string out;
    for (int i = 0, n = len(rng); i < n; i++) out += alphabet[pick(rng)];
    return out;
}

}  // namespace

TEST_CASE("parse_policy splits directives and source expressions") {
    Policy p = parse_policy(kExamplePolicy, Disposition::Enforce, Delivery::Header);
    REQUIRE(p.directives.size() == 2);
    CHECK(p.directives[0].name == "default-src");
    REQUIRE(p.directives[0].sources.size() == 1);
    CHECK(p.directives[0].sources[0].value == "'self'");
    CHECK(p.directives[0].sources[0].kind == SourceKind::Keyword);
    CHECK(p.directives[1].name == "script-src");
    REQUIRE(p.directives[1].sources.size() == 2);
    CHECK(p.directives[1].sources[0].kind == SourceKind::Nonce);
    CHECK(p.directives[1].sources[0].nonce_value == "cmFuZG9t");
    CHECK(p.raw == kExamplePolicy);
}

TEST_CASE("parse_policy keeps only the first duplicate directive") {
    Policy p = parse_policy("script-src a; script-src b", Disposition::Enforce, Delivery::Header);
    REQUIRE(p.directives.size() == 1);
    REQUIRE(p.directives[0].sources.size() == 1);
    CHECK(p.directives[0].sources[0].value == "a");
    REQUIRE(p.warnings.size() == 1);
}

TEST_CASE("parse_policy single directive and empty policies") {
    Policy p = parse_policy("script-src 'none'", Disposition::Enforce, Delivery::Header);
    REQUIRE(p.directives.size() == 1);
    CHECK(p.directives[0].sources[0].value == "'none'");

    Policy empty = parse_policy("  ;  ; ", Disposition::Enforce, Delivery::Header);
    CHECK(empty.directives.empty());
    CHECK(!empty.warnings.empty());
}

TEST_CASE("parse_policy round-trips its directive map") {
    Policy p = parse_policy(kExamplePolicy, Disposition::Enforce, Delivery::Header);
    // serialize the directive map and re-parse
    std::string serialized;
    for (const auto& d : p.directives) {
        if (!serialized.empty()) serialized += "; ";
        serialized += d.name;
        for (const auto& s : d.sources) serialized += " " + s.value;
    }
    Policy again = parse_policy(serialized, Disposition::Enforce, Delivery::Header);
    REQUIRE(again.directives.size() == p.directives.size());
    for (size_t i = 0; i < p.directives.size(); i++) {
        CHECK(again.directives[i].name == p.directives[i].name);
        REQUIRE(again.directives[i].sources.size() == p.directives[i].sources.size());
        for (size_t j = 0; j < p.directives[i].sources.size(); j++) {
            CHECK(again.directives[i].sources[j].value == p.directives[i].sources[j].value);
        }
    }
}

TEST_CASE("extract_policies reads headers and meta tags") {
    HeaderList headers = {{"Content-Type", "text/html"},
                          {"Content-Security-Policy", kExamplePolicy}};
    std::string body =
        "<html><head><meta http-equiv=\"content-security-policy\" "
        "content=\"script-src 'nonce-xyz'\"></head></html>";
    PolicySet set = extract_policies(headers, body, "https://ex.com/");
    REQUIRE(set.policies.size() == 2);
    CHECK(set.policies[0].delivery == Delivery::Header);
    CHECK(set.policies[0].disposition == Disposition::Enforce);
    CHECK(set.policies[1].delivery == Delivery::MetaTag);
    CHECK_FALSE(set.report_only_meta_violation);
}

TEST_CASE("extract_policies with neither header nor meta is empty") {
    PolicySet set = extract_policies({{"Content-Type", "text/html"}}, "<html></html>", "u");
    CHECK(set.policies.empty());
}

TEST_CASE("report-only meta is a violation finding, not a policy") {
    std::string body =
        "<meta http-equiv=\"Content-Security-Policy-Report-Only\" content=\"script-src 'none'\">";
    PolicySet set = extract_policies({}, body, "u");
    CHECK(set.policies.empty());
    CHECK(set.report_only_meta_violation);
}

TEST_CASE("report-only header keeps ReportOnly disposition") {
    HeaderList headers = {{"Content-Security-Policy-Report-Only", "script-src 'nonce-a'"}};
    PolicySet set = extract_policies(headers, "", "u");
    REQUIRE(set.policies.size() == 1);
    CHECK(set.policies[0].disposition == Disposition::ReportOnly);
    CHECK_FALSE(set.any_enforced_nonce());
}

TEST_CASE("nonce_sources enumerates nonces across directives in order") {
    Policy p = parse_policy(kExamplePolicy, Disposition::Enforce, Delivery::Header);
    auto sources = nonce_sources(p);
    REQUIRE(sources.size() == 1);
    CHECK(sources[0] == std::pair<std::string, std::string>{"script-src", "cmFuZG9t"});

    Policy two = parse_policy("script-src 'nonce-a'; style-src 'nonce-b'", Disposition::Enforce,
                              Delivery::Header);
    auto both = nonce_sources(two);
    REQUIRE(both.size() == 2);
    CHECK(both[0] == std::pair<std::string, std::string>{"script-src", "a"});
    CHECK(both[1] == std::pair<std::string, std::string>{"style-src", "b"});

    CHECK(nonce_sources(parse_policy("script-src 'self'", Disposition::Enforce, Delivery::Header))
              .empty());
}

TEST_CASE("allows_inline_script follows the nonce matching semantics") {
    Policy p = parse_policy(kExamplePolicy, Disposition::Enforce, Delivery::Header);
    CHECK(allows_inline_script(p, std::string("cmFuZG9t")));
    CHECK_FALSE(allows_inline_script(p, std::nullopt));
    CHECK_FALSE(allows_inline_script(p, std::string("wrong")));
}

TEST_CASE("default-src is the fallback for inline scripts") {
    Policy p = parse_policy("default-src 'nonce-x'", Disposition::Enforce, Delivery::Header);
    CHECK(allows_inline_script(p, std::string("x")));
    CHECK_FALSE(allows_inline_script(p, std::string("y")));
}

TEST_CASE("unsafe-inline is neutralized by nonce or hash sources") {
    Policy plain = parse_policy("script-src 'unsafe-inline'", Disposition::Enforce,
                                Delivery::Header);
    CHECK(allows_inline_script(plain, std::nullopt));

    Policy with_nonce = parse_policy("script-src 'unsafe-inline' 'nonce-a'",
                                     Disposition::Enforce, Delivery::Header);
    CHECK_FALSE(allows_inline_script(with_nonce, std::nullopt));
    CHECK(allows_inline_script(with_nonce, std::string("a")));

    Policy no_governing = parse_policy("img-src 'self'", Disposition::Enforce, Delivery::Header);
    CHECK(allows_inline_script(no_governing, std::nullopt));
}

TEST_CASE("nonce match is exact, case- and whitespace-sensitive") {
    std::mt19937 rng(11);
    for (int i = 0; i < 200; i++) {
        std::string a = random_token(rng);
        std::string b = random_token(rng);
        if (a == b) continue;
        Policy p = parse_policy("script-src 'nonce-" + a + "'", Disposition::Enforce,
                                Delivery::Header);
        CHECK(allows_inline_script(p, a));
        CHECK_FALSE(allows_inline_script(p, b));
        CHECK_FALSE(allows_inline_script(p, a + " "));
    }
}

TEST_CASE("fallback property: copying default-src into script-src is equivalent") {
    std::mt19937 rng(13);
    for (int i = 0; i < 100; i++) {
        std::string value = random_token(rng);
        std::string probe = i % 2 == 0 ? value : random_token(rng);
        Policy without = parse_policy("default-src 'nonce-" + value + "' 'self'",
                                      Disposition::Enforce, Delivery::Header);
        Policy with = parse_policy("default-src 'nonce-" + value + "' 'self'; script-src 'nonce-" +
                                       value + "' 'self'",
                                   Disposition::Enforce, Delivery::Header);
        CHECK(allows_inline_script(without, probe) == allows_inline_script(with, probe));
    }
}
