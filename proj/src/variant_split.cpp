#include "ptkit/variant_split.hpp"

#include <algorithm>
#include <cctype>

namespace ptkit::variant {

namespace {

bool is_scheme(std::string_view s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '+' || c == '-' || c == '.';
    });
}

bool is_host_byte(unsigned char c) {
    // Non-ASCII bytes are allowed through for internationalized names.
    return c >= 0x80 || std::isalnum(c) || c == '-' || c == '_' || c == '.';
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

std::string_view to_string(VariantLabel v) noexcept {
    switch (v) {
        case VariantLabel::PTPT:
            return "PTPT";
        case VariantLabel::PTBR:
            return "PTBR";
        case VariantLabel::Discard:
            return "Discard";
    }
    return "Discard";
}

std::optional<std::string> extract_host(std::string_view url) {
    while (!url.empty() && std::isspace(static_cast<unsigned char>(url.front()))) {
        url.remove_prefix(1);
    }
    while (!url.empty() && std::isspace(static_cast<unsigned char>(url.back()))) {
        url.remove_suffix(1);
    }

    std::string_view rest = url;
    if (const auto sep = url.find("://"); sep != std::string_view::npos) {
        if (!is_scheme(url.substr(0, sep))) {
            return std::nullopt;
        }
        rest = url.substr(sep + 3);
    } else if (url.starts_with("//")) {
        rest = url.substr(2);
    }

    std::string_view authority = rest.substr(0, rest.find_first_of("/?#"));
    if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
        authority.remove_prefix(at + 1);
    }
    if (authority.starts_with('[')) {
        return std::nullopt;
    }
    if (const auto colon = authority.find(':'); colon != std::string_view::npos) {
        const std::string_view port = authority.substr(colon + 1);
        if (!port.empty() && !all_digits(port)) {
            return std::nullopt;
        }
        authority = authority.substr(0, colon);
    }
    if (authority.ends_with('.')) {
        authority.remove_suffix(1);
    }
    if (authority.empty() || authority.starts_with('.')) {
        return std::nullopt;
    }
    if (!std::all_of(authority.begin(), authority.end(), [](char c) { return is_host_byte(static_cast<unsigned char>(c)); })) {
        return std::nullopt;
    }
    if (authority.find("..") != std::string_view::npos) {
        return std::nullopt;
    }

    std::string host(authority);
    std::transform(host.begin(), host.end(), host.begin(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x80 ? static_cast<char>(std::tolower(u)) : c;
    });
    return host;
}

std::optional<std::string> extract_tld(std::string_view url) {
    auto host = extract_host(url);
    if (!host) {
        return std::nullopt;
    }
    const auto dot = host->rfind('.');
    if (dot == std::string::npos) {
        return std::nullopt;
    }
    std::string tld = host->substr(dot + 1);
    // An all-numeric final label means a dotted IPv4 address.
    if (tld.empty() || all_digits(tld)) {
        return std::nullopt;
    }
    return tld;
}

VariantLabel classify_variant(const corpus::CorpusRecord& record) {
    if (!record.url) {
        return VariantLabel::Discard;
    }
    const auto tld = extract_tld(*record.url);
    if (!tld) {
        return VariantLabel::Discard;
    }
    if (*tld == "br") {
        return VariantLabel::PTBR;
    }
    if (*tld == "pt") {
        return VariantLabel::PTPT;
    }
    return VariantLabel::Discard;
}

VariantLabel route_record(const corpus::CorpusRecord& record, const RoutingPolicy& policy) {
    if (!record.url && policy.urlless_ptpt_sources.contains(record.source)) {
        return VariantLabel::PTPT;
    }
    return classify_variant(record);
}

std::vector<VariantLabel> route_batch_serial(std::span<const corpus::CorpusRecord> records, const RoutingPolicy& policy) {
    std::vector<VariantLabel> labels;
    labels.reserve(records.size());
    for (const auto& rec : records) {
        labels.push_back(route_record(rec, policy));
    }
    return labels;
}

std::vector<VariantLabel> route_batch(std::span<const corpus::CorpusRecord> records, const RoutingPolicy& policy) {
    std::vector<VariantLabel> labels(records.size(), VariantLabel::Discard);
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = route_record(records[static_cast<std::size_t>(i)], policy);
    }
    return labels;
}

}  // namespace ptkit::variant
