#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptkit/corpus_io.hpp"

namespace ptkit::variant {

enum class VariantLabel { PTPT, PTBR, Discard };

std::string_view to_string(VariantLabel v) noexcept;

// Hostname of a URL, lowercased, without userinfo, port or trailing dot.
// Scheme-less input gets "http://" prepended. Returns nullopt when no
// plausible hostname is present (spaces, empty labels, bracketed IPv6).
std::optional<std::string> extract_host(std::string_view url);

// Final label of the hostname. Bare IPv4 hosts and single-label hosts have no TLD.
std::optional<std::string> extract_tld(std::string_view url);

// "br" -> PTBR, "pt" -> PTPT, anything else (including no url) -> Discard.
VariantLabel classify_variant(const corpus::CorpusRecord& record);

// Pipeline routing: records without a URL whose source is listed here go
// straight to PTPT (the parliamentary corpora); everything else is classified by TLD.
struct RoutingPolicy {
    std::set<corpus::Source> urlless_ptpt_sources{corpus::Source::DCEP, corpus::Source::Europarl,
                                                   corpus::Source::ParlamentoPT};
};

VariantLabel route_record(const corpus::CorpusRecord& record, const RoutingPolicy& policy);

// Batch kernels. The serial version is the reference the parallel one is tested against.
std::vector<VariantLabel> route_batch_serial(std::span<const corpus::CorpusRecord> records, const RoutingPolicy& policy);
std::vector<VariantLabel> route_batch(std::span<const corpus::CorpusRecord> records, const RoutingPolicy& policy);

}  // namespace ptkit::variant
