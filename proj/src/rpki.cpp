#include "mvres/rpki.hpp"

#include <algorithm>
#include <istream>
#include <map>

#include "mvres/error.hpp"
#include "text.hpp"

namespace mvres {

RoaSet::RoaSet(std::vector<RoaRecord> records) : records_(std::move(records)) {
  std::sort(records_.begin(), records_.end());
  records_.erase(std::unique(records_.begin(), records_.end()), records_.end());
  std::map<Prefix, std::uint32_t> bucket_of;
  for (std::uint32_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.max_length < r.prefix.length() || r.max_length > r.prefix.network().bit_width()) {
      throw InputError("ROA " + r.prefix.str() + " max length " + std::to_string(r.max_length) +
                       " outside [" + std::to_string(r.prefix.length()) + ", " +
                       std::to_string(r.prefix.network().bit_width()) + "]");
    }
    auto [it, inserted] = bucket_of.emplace(r.prefix, static_cast<std::uint32_t>(buckets_.size()));
    if (inserted) {
      buckets_.emplace_back();
      trie_.insert(r.prefix, it->second);
    }
    buckets_[it->second].push_back(i);
  }
}

std::vector<const RoaRecord*> RoaSet::covering(const Prefix& prefix) const {
  std::vector<const RoaRecord*> out;
  if (records_.empty()) return out;
  trie_.for_each_covering(prefix.network(), prefix.length(), [&](int, std::uint32_t bucket) {
    for (auto i : buckets_[bucket]) out.push_back(&records_[i]);
  });
  return out;
}

bool RoaSet::covers(const Prefix& prefix) const {
  if (records_.empty()) return false;
  bool found = false;
  trie_.for_each_covering(prefix.network(), prefix.length(), [&](int, std::uint32_t) { found = true; });
  return found;
}

RoaSet load_roas(std::istream& in) {
  std::vector<RoaRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 3) throw IngestError(line_no, "expected asn,cidr,max_length");
    if (fields[0] == "asn" || fields[0] == "ASN") continue;  // header
    auto asn_field = fields[0];
    if (asn_field.size() > 2 && (asn_field.substr(0, 2) == "AS" || asn_field.substr(0, 2) == "as")) {
      asn_field.remove_prefix(2);
    }
    const auto asn = text::parse_int<Asn>(asn_field);
    if (!asn) throw IngestError(line_no, "invalid AS number '" + std::string(fields[0]) + "'");
    const auto prefix = Prefix::parse(fields[1]);
    if (!prefix) throw IngestError(line_no, "unparsable CIDR '" + std::string(fields[1]) + "'");
    const auto max_length = text::parse_int<int>(fields[2]);
    if (!max_length) throw IngestError(line_no, "invalid max length '" + std::string(fields[2]) + "'");
    if (*max_length < prefix->length() || *max_length > prefix->network().bit_width()) {
      throw IngestError(line_no, "max length " + std::to_string(*max_length) +
                                     " is shorter than prefix " + prefix->str() +
                                     " or wider than the address family");
    }
    records.push_back({*asn, *prefix, *max_length});
  }
  return RoaSet(std::move(records));
}

Validity validate_announcement(const RoaSet& roas, const Prefix& prefix, Asn origin) {
  const auto covering = roas.covering(prefix);
  if (covering.empty()) return Validity::not_found;
  for (const auto* roa : covering) {
    if (roa->asn == origin && prefix.length() <= roa->max_length) return Validity::valid;
  }
  return Validity::invalid;
}

std::string_view to_string(RpkiMode mode) {
  switch (mode) {
    case RpkiMode::none: return "none";
    case RpkiMode::current: return "current";
    case RpkiMode::full: return "full";
  }
  return "?";
}

std::optional<RpkiMode> parse_rpki_mode(std::string_view text) {
  for (auto mode : kAllRpkiModes) {
    if (to_string(mode) == text) return mode;
  }
  return std::nullopt;
}

bool rov_effective(RpkiMode mode, const RoaSet& roas, const Prefix& prefix) {
  switch (mode) {
    case RpkiMode::none: return false;
    case RpkiMode::full: return true;
    case RpkiMode::current: return roas.covers(prefix);
  }
  return false;
}

std::vector<PrefixGroup> split_groups_by_roa_coverage(std::span<const PrefixGroup> groups,
                                                      const RoaSet& roas) {
  std::vector<PrefixGroup> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    PrefixGroup covered{0, g.origins, {}, true};
    PrefixGroup uncovered{0, g.origins, {}, false};
    for (const auto& p : g.members) (roas.covers(p) ? covered : uncovered).members.push_back(p);
    for (auto* part : {&uncovered, &covered}) {
      if (part->members.empty()) continue;
      part->id = static_cast<std::uint32_t>(out.size());
      out.push_back(std::move(*part));
    }
  }
  return out;
}

}  // namespace mvres
