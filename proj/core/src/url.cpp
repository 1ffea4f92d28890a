#include "nonce_audit/url.hpp"

#include <cctype>
#include <sstream>
#include <vector>

#include "nonce_audit/headers.hpp"

namespace nonce_audit {

int Url::effective_port() const {
    if (port > 0) return port;
    if (scheme == "https") return 443;
    if (scheme == "http") return 80;
    return -1;
}

bool Url::has_default_port() const {
    if (port < 0) return true;
    return (scheme == "https" && port == 443) || (scheme == "http" && port == 80);
}

std::string Url::to_string() const {
    std::ostringstream out;
    out << scheme << "://" << host;
    if (!has_default_port()) out << ':' << port;
    out << (path.empty() ? "/" : path);
    if (!query.empty()) out << '?' << query;
    if (!fragment.empty()) out << '#' << fragment;
    return out.str();
}

static bool valid_host(std::string_view host) {
    if (host.empty() || host.size() > 253) return false;
    for (char c : host) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') return false;
    }
    return host.front() != '.' && host.back() != '.';
}

std::optional<Url> parse_url(std::string_view text) {
    auto pos = text.find("://");
    if (pos == std::string_view::npos || pos == 0) return std::nullopt;
    Url u;
    u.scheme = to_lower(text.substr(0, pos));
    std::string_view rest = text.substr(pos + 3);

    auto authority_end = rest.find_first_of("/?#");
    std::string_view authority =
        authority_end == std::string_view::npos ? rest : rest.substr(0, authority_end);
    rest = authority_end == std::string_view::npos ? std::string_view{} : rest.substr(authority_end);

    // userinfo not supported, ports must be numeric
    if (authority.find('@') != std::string_view::npos) return std::nullopt;
    auto colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        std::string_view port_s = authority.substr(colon + 1);
        if (port_s.empty()) return std::nullopt;
        int port = 0;
        for (char c : port_s) {
            if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
            port = port * 10 + (c - '0');
            if (port > 65535) return std::nullopt;
        }
        u.port = port;
        authority = authority.substr(0, colon);
    }
    u.host = to_lower(authority);
    if (!valid_host(u.host)) return std::nullopt;

    auto frag = rest.find('#');
    if (frag != std::string_view::npos) {
        u.fragment = std::string(rest.substr(frag + 1));
        rest = rest.substr(0, frag);
    }
    auto qmark = rest.find('?');
    if (qmark != std::string_view::npos) {
        u.query = std::string(rest.substr(qmark + 1));
        rest = rest.substr(0, qmark);
    }
    u.path = std::string(rest);
    if (u.path.empty()) u.path = "/";
    return u;
}

std::optional<std::string> normalize_url(const std::string& url) {
    auto u = parse_url(url);
    if (!u) return std::nullopt;
    if (u->scheme != "http" && u->scheme != "https") return std::nullopt;
    u->fragment.clear();
    if (u->has_default_port()) u->port = -1;
    return u->to_string();
}

static std::string remove_dot_segments(std::string_view path) {
    std::vector<std::string_view> out;
    size_t i = 0;
    bool trailing_slash = !path.empty() && path.back() == '/';
    while (i < path.size()) {
        auto next = path.find('/', i);
        std::string_view seg =
            next == std::string_view::npos ? path.substr(i) : path.substr(i, next - i);
        i = next == std::string_view::npos ? path.size() : next + 1;
        if (seg == "." || seg.empty()) continue;
        if (seg == "..") {
            if (!out.empty()) out.pop_back();
            continue;
        }
        out.push_back(seg);
    }
    std::string result;
    for (auto& seg : out) {
        result += '/';
        result += seg;
    }
    if (result.empty()) return "/";
    if (trailing_slash || path.ends_with("/.") || path.ends_with("/..")) result += '/';
    return result;
}

std::optional<std::string> resolve_url(const std::string& href, const Url& base) {
    std::string_view h = trim(href);
    if (h.empty()) return base.to_string();
    if (h.find("://") != std::string_view::npos && h.find("://") < h.find('/')) {
        auto u = parse_url(h);
        if (!u) return std::nullopt;
        return u->to_string();
    }
    Url u = base;
    u.fragment.clear();
    if (h.starts_with("//")) {
        return resolve_url(base.scheme + ":" + std::string(h), base);
    }
    if (h.starts_with('#')) {
        u.fragment = std::string(h.substr(1));
        return u.to_string();
    }
    if (h.starts_with('?')) {
        u.query = std::string(h.substr(1));
        return u.to_string();
    }
    // scheme-only relative like "javascript:" or "mailto:" is not resolvable
    auto colon = h.find(':');
    auto slash = h.find('/');
    if (colon != std::string_view::npos && (slash == std::string_view::npos || colon < slash))
        return std::nullopt;

    std::string path;
    if (h.starts_with('/')) {
        path = std::string(h);
    } else {
        auto dir = base.path.rfind('/');
        path = (dir == std::string::npos ? "/" : base.path.substr(0, dir + 1)) + std::string(h);
    }
    auto qmark = path.find('?');
    if (qmark != std::string::npos) {
        u.query = path.substr(qmark + 1);
        path = path.substr(0, qmark);
    } else {
        u.query.clear();
    }
    auto frag = u.query.find('#');
    if (frag != std::string::npos) {
        u.fragment = u.query.substr(frag + 1);
        u.query = u.query.substr(0, frag);
    }
    frag = path.find('#');
    if (frag != std::string::npos) {
        u.fragment = path.substr(frag + 1);
        path = path.substr(0, frag);
    }
    u.path = remove_dot_segments(path);
    return u.to_string();
}

bool is_internal(const std::string& url, const std::string& registrable_domain) {
    auto u = parse_url(url);
    if (!u) return false;
    std::string domain = to_lower(registrable_domain);
    if (u->host == domain) return true;
    return u->host.size() > domain.size() + 1 && u->host.ends_with("." + domain);
}

}  // namespace nonce_audit
