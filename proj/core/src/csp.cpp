#include "nonce_audit/csp.hpp"

#include <algorithm>

#include "nonce_audit/html.hpp"

namespace nonce_audit {

const Directive* Policy::find(std::string_view directive_name) const {
    for (const auto& d : directives) {
        if (d.name == directive_name) return &d;
    }
    return nullptr;
}

bool PolicySet::any_enforced_nonce() const {
    for (const auto& p : policies) {
        if (p.disposition != Disposition::Enforce) continue;
        if (!nonce_sources(p).empty()) return true;
    }
    return false;
}

namespace {

SourceExpression classify_source(std::string_view token) {
    SourceExpression e;
    e.value = std::string(token);
    if (token.size() >= 2 && token.front() == '\'' && token.back() == '\'') {
        std::string_view inner = token.substr(1, token.size() - 2);
        if (inner.size() > 6 && inner.substr(0, 6) == "nonce-") {
            e.kind = SourceKind::Nonce;
            e.nonce_value = std::string(inner.substr(6));
        } else if (inner.starts_with("sha256-") || inner.starts_with("sha384-") ||
                   inner.starts_with("sha512-")) {
            e.kind = SourceKind::Hash;
        } else {
            e.kind = SourceKind::Keyword;
        }
        return e;
    }
    if (token.size() >= 2 && token.back() == ':' &&
        token.find('/') == std::string_view::npos) {
        e.kind = SourceKind::SchemeSource;
        return e;
    }
    e.kind = SourceKind::HostSource;
    return e;
}

}  // namespace

Policy parse_policy(std::string_view text, Disposition disposition, Delivery delivery) {
    Policy policy;
    policy.raw = std::string(text);
    policy.disposition = disposition;
    policy.delivery = delivery;

    size_t pos = 0;
    while (pos <= text.size()) {
        auto semi = text.find(';', pos);
        std::string_view segment =
            semi == std::string_view::npos ? text.substr(pos) : text.substr(pos, semi - pos);
        pos = semi == std::string_view::npos ? text.size() + 1 : semi + 1;

        segment = trim(segment);
        if (segment.empty()) continue;

        Directive directive;
        size_t i = 0;
        while (i <= segment.size()) {
            auto ws = segment.find_first_of(" \t\r\n\f", i);
            std::string_view token =
                ws == std::string_view::npos ? segment.substr(i) : segment.substr(i, ws - i);
            i = ws == std::string_view::npos ? segment.size() + 1 : ws + 1;
            if (token.empty()) continue;
            if (directive.name.empty()) {
                directive.name = to_lower(token);
            } else {
                directive.sources.push_back(classify_source(token));
            }
        }
        if (directive.name.empty()) continue;
        if (policy.find(directive.name)) {
            policy.warnings.push_back("duplicate directive ignored: " + directive.name);
            continue;
        }
        policy.directives.push_back(std::move(directive));
    }
    if (policy.directives.empty()) {
        policy.warnings.push_back("policy contains no directives");
    }
    return policy;
}

PolicySet extract_policies(const HeaderList& headers, const std::string& body,
                           std::string source_url) {
    PolicySet set;
    set.source_url = std::move(source_url);

    for (const auto& [name, value] : headers) {
        if (iequals(name, "content-security-policy")) {
            set.policies.push_back(
                parse_policy(trim(value), Disposition::Enforce, Delivery::Header));
        } else if (iequals(name, "content-security-policy-report-only")) {
            set.policies.push_back(
                parse_policy(trim(value), Disposition::ReportOnly, Delivery::Header));
        }
    }

    for (const auto& tag : scan_tags(body)) {
        if (tag.name != "meta") continue;
        const std::string* equiv = tag.attr("http-equiv");
        if (!equiv) continue;
        if (iequals(*equiv, "content-security-policy")) {
            const std::string* content = tag.attr("content");
            if (!content || trim(*content).empty()) {
                set.warnings.push_back("meta CSP tag without content");
                continue;
            }
            set.policies.push_back(
                parse_policy(trim(*content), Disposition::Enforce, Delivery::MetaTag));
        } else if (iequals(*equiv, "content-security-policy-report-only")) {
            set.report_only_meta_violation = true;
        }
    }
    return set;
}

std::vector<std::pair<std::string, std::string>> nonce_sources(const Policy& policy) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& d : policy.directives) {
        for (const auto& s : d.sources) {
            if (s.kind == SourceKind::Nonce) out.emplace_back(d.name, s.nonce_value);
        }
    }
    return out;
}

bool allows_inline_script(const Policy& policy, const std::optional<std::string>& script_nonce) {
    const Directive* governing = policy.find("script-src");
    if (!governing) governing = policy.find("default-src");
    if (!governing) return true;  // no restriction on scripts

    bool has_nonce_or_hash = false;
    bool has_unsafe_inline = false;
    for (const auto& s : governing->sources) {
        if (s.kind == SourceKind::Nonce || s.kind == SourceKind::Hash) has_nonce_or_hash = true;
        if (s.kind == SourceKind::Keyword && s.value == "'unsafe-inline'") has_unsafe_inline = true;
        if (script_nonce && s.kind == SourceKind::Nonce && s.nonce_value == *script_nonce)
            return true;
    }
    // nonce/hash presence disables 'unsafe-inline'
    return has_unsafe_inline && !has_nonce_or_hash;
}

}  // namespace nonce_audit
