#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nonce_audit {

enum class NonceLocation { PolicyDirective, ScriptTag, StyleTag };

struct NonceObservation {
    std::string value;  // verbatim, never trimmed
    NonceLocation location = NonceLocation::ScriptTag;
    std::string directive;  // set for PolicyDirective observations
    std::string page_url;
    int probe_index = 1;  // 1..4
};

struct LengthVerdict {
    size_t useful_chars = 0;  // trailing '=' padding excluded
    bool is_short = false;    // useful_chars < 22, i.e. under 128 bits pre-encoding
    size_t estimated_bits = 0;
    bool interior_padding = false;  // '=' before the end of the value
};

struct ValidityVerdict {
    bool is_valid = true;
    std::set<char> offending_chars;  // outside base64 + base64url + padding
    // Informational: legal in only one of the two base64 alphabets.
    std::set<char> single_alphabet_chars;
};

// One observation per script (and, flagged separately, style/link) element
// bearing a nonce attribute, in document order.
std::vector<NonceObservation> extract_dom_nonces(const std::string& html,
                                                 const std::string& page_url, int probe_index);

std::optional<LengthVerdict> check_length(const std::string& value);  // nullopt when empty
ValidityVerdict check_validity(const std::string& value);

}  // namespace nonce_audit
