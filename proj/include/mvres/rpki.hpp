#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mvres/ip.hpp"
#include "mvres/topology.hpp"

namespace mvres {

struct RoaRecord {
  Asn asn = 0;
  Prefix prefix;
  int max_length = 0;

  auto operator<=>(const RoaRecord&) const = default;
};

/// Deduplicated ROA records with covering-prefix lookup.
class RoaSet {
 public:
  RoaSet() = default;
  /// Throws InputError if a record violates
  /// prefix length <= max_length <= family width.
  explicit RoaSet(std::vector<RoaRecord> records);

  const std::vector<RoaRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }

  /// Records whose prefix covers `prefix`.
  std::vector<const RoaRecord*> covering(const Prefix& prefix) const;
  bool covers(const Prefix& prefix) const;

 private:
  std::vector<RoaRecord> records_;
  // Trie values index into `buckets_`, one bucket per distinct ROA prefix.
  PrefixTrie trie_;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

/// CSV `asn,cidr,max_length`; the asn field may carry an `AS` prefix.
RoaSet load_roas(std::istream& in);

enum class Validity { valid, invalid, not_found };

/// Route origin validation: valid if any covering ROA matches origin and
/// length, invalid if covered but none match, not_found otherwise.
Validity validate_announcement(const RoaSet& roas, const Prefix& prefix, Asn origin);

enum class RpkiMode : std::uint8_t { none = 0, current = 1, full = 2 };

inline constexpr RpkiMode kAllRpkiModes[] = {RpkiMode::none, RpkiMode::current, RpkiMode::full};

std::string_view to_string(RpkiMode mode);
std::optional<RpkiMode> parse_rpki_mode(std::string_view text);

/// Whether vantage points drop routes not ending in the legitimate origin
/// for `prefix` under `mode`.
bool rov_effective(RpkiMode mode, const RoaSet& roas, const Prefix& prefix);

/// Splits groups whose members disagree on ROA coverage and records the
/// coverage on each group. Ids are reassigned in order.
std::vector<PrefixGroup> split_groups_by_roa_coverage(std::span<const PrefixGroup> groups,
                                                      const RoaSet& roas);

}  // namespace mvres
