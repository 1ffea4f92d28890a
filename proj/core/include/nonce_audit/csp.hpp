#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nonce_audit/headers.hpp"

namespace nonce_audit {

enum class Disposition { Enforce, ReportOnly };
enum class Delivery { Header, MetaTag };

enum class SourceKind { Keyword, HostSource, SchemeSource, Nonce, Hash };

struct SourceExpression {
    SourceKind kind = SourceKind::HostSource;
    std::string value;        // token text, verbatim
    std::string nonce_value;  // set iff kind == Nonce
};

struct Directive {
    std::string name;  // lowercase
    std::vector<SourceExpression> sources;
};

struct Policy {
    std::vector<Directive> directives;  // first occurrence wins, order kept
    Disposition disposition = Disposition::Enforce;
    Delivery delivery = Delivery::Header;
    std::string raw;
    std::vector<std::string> warnings;

    const Directive* find(std::string_view directive_name) const;
};

struct PolicySet {
    std::vector<Policy> policies;  // header order first, then meta order
    std::string source_url;
    // A meta tag tried to deliver a report-only policy; recorded as a
    // finding, not a Policy.
    bool report_only_meta_violation = false;
    std::vector<std::string> warnings;

    bool any_enforced_nonce() const;
};

Policy parse_policy(std::string_view text, Disposition disposition, Delivery delivery);

PolicySet extract_policies(const HeaderList& headers, const std::string& body,
                           std::string source_url);

// Every nonce source across all directives, in order: (directive, value).
std::vector<std::pair<std::string, std::string>> nonce_sources(const Policy& policy);

// Would this policy let an inline script with the given nonce attribute
// (or none) execute? script-src governs, falling back to default-src.
bool allows_inline_script(const Policy& policy, const std::optional<std::string>& script_nonce);

}  // namespace nonce_audit
