#include "nonce_audit/nonce.hpp"

#include <cctype>

#include "nonce_audit/html.hpp"

namespace nonce_audit {

std::vector<NonceObservation> extract_dom_nonces(const std::string& html,
                                                 const std::string& page_url, int probe_index) {
    std::vector<NonceObservation> out;
    for (const auto& tag : scan_tags(html)) {
        NonceLocation location;
        if (tag.name == "script") {
            location = NonceLocation::ScriptTag;
        } else if (tag.name == "style" || tag.name == "link") {
            location = NonceLocation::StyleTag;
        } else {
            continue;
        }
        const std::string* nonce = tag.attr("nonce");
        if (!nonce || nonce->empty()) continue;
        out.push_back({*nonce, location, "", page_url, probe_index});
    }
    return out;
}

std::optional<LengthVerdict> check_length(const std::string& value) {
    if (value.empty()) return std::nullopt;
    size_t end = value.size();
    while (end > 0 && value[end - 1] == '=') end--;
    LengthVerdict v;
    v.useful_chars = end;
    v.is_short = v.useful_chars < 22;
    v.estimated_bits = v.useful_chars * 6;
    v.interior_padding = value.substr(0, end).find('=') != std::string::npos;
    return v;
}

ValidityVerdict check_validity(const std::string& value) {
    ValidityVerdict v;
    for (char c : value) {
        bool base64_only = (c == '+' || c == '/');
        bool base64url_only = (c == '-' || c == '_');
        bool common = std::isalnum(static_cast<unsigned char>(c)) || c == '=';
        if (!common && !base64_only && !base64url_only) {
            v.offending_chars.insert(c);
        } else if (base64_only || base64url_only) {
            v.single_alphabet_chars.insert(c);
        }
    }
    v.is_valid = v.offending_chars.empty();
    return v;
}

}  // namespace nonce_audit
