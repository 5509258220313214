#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mvres/routing.hpp"
#include "mvres/rpki.hpp"
#include "mvres/topology.hpp"

namespace mvres {

struct VpOutcome {
  bool hijacked = false;
  bool no_route = false;

  bool operator==(const VpOutcome&) const = default;
};

struct AttackOptions {
  /// Vantage-point ASes discard routes whose claimed origin is not the victim.
  bool rov_at_vantage_points = false;
};

/// Runs one equally-specific hijack of `victim_origin`'s prefix by
/// `adversary`. A vantage point is hijacked when its chosen route traverses
/// the adversary; vantage points left without a route count as not hijacked.
std::map<Asn, VpOutcome> simulate_attack(const AsGraph& graph, Asn victim_origin, Asn adversary,
                                         std::span<const Asn> vp_ases, AnnouncementKind kind,
                                         const AttackOptions& options = {});

/// Dense bit tensor alpha(adversary, prefix group, vantage-point AS, regime).
/// Adversaries, vantage points and regimes are kept sorted; groups keep the
/// order given (ascending id). Bits are laid out adversary-major:
/// ((adversary * G + group) * V + vp) * R + regime.
class AttackBitStore {
 public:
  AttackBitStore() = default;
  AttackBitStore(std::vector<Asn> adversaries, std::vector<PrefixGroup> groups,
                 std::vector<Asn> vp_ases, std::vector<RpkiMode> regimes);

  const std::vector<Asn>& adversaries() const noexcept { return adversaries_; }
  const std::vector<PrefixGroup>& groups() const noexcept { return groups_; }
  const std::vector<Asn>& vp_ases() const noexcept { return vp_ases_; }
  const std::vector<RpkiMode>& regimes() const noexcept { return regimes_; }

  std::optional<std::size_t> adversary_index(Asn asn) const;
  std::optional<std::size_t> group_position(std::uint32_t group_id) const;
  std::optional<std::size_t> vp_index(Asn asn) const;
  std::optional<std::size_t> regime_index(RpkiMode mode) const;

  std::size_t bit_count() const noexcept {
    return adversaries_.size() * groups_.size() * vp_ases_.size() * regimes_.size();
  }
  std::size_t offset(std::size_t adversary, std::size_t group, std::size_t vp,
                     std::size_t regime) const noexcept {
    return ((adversary * groups_.size() + group) * vp_ases_.size() + vp) * regimes_.size() + regime;
  }

  bool get(std::size_t bit) const noexcept { return (bits_[bit >> 3] >> (bit & 7)) & 1U; }
  bool get(std::size_t adversary, std::size_t group, std::size_t vp, std::size_t regime) const noexcept {
    return get(offset(adversary, group, vp, regime));
  }
  /// Safe to call concurrently for distinct bits.
  void set(std::size_t bit) noexcept;

  /// nullopt if any coordinate is outside the stored index space.
  std::optional<bool> lookup(Asn adversary, std::uint32_t group_id, Asn vp_as, RpkiMode regime) const;

  /// Little-endian binary layout: magic, dimension counts, the sorted
  /// index lists, the group table, then the packed bits.
  void write(std::ostream& out) const;
  static AttackBitStore read(std::istream& in);
  /// `adversary,group_id,vp_as,regime,bit`
  void write_csv(std::ostream& out) const;

  bool operator==(const AttackBitStore&) const = default;

 private:
  std::vector<Asn> adversaries_;
  std::vector<PrefixGroup> groups_;
  std::vector<Asn> vp_ases_;
  std::vector<RpkiMode> regimes_;
  std::vector<std::uint8_t> bits_;
};

/// Simulates every (adversary, group) pair under the requested regimes.
/// Where ROV is effective for a group the adversary prepends the legitimate
/// origin and vantage points filter on origin; otherwise it originates the
/// prefix itself. An adversary that is the group's legitimate origin hijacks
/// every vantage point that routes to the prefix.
struct MatrixOptions {
  unsigned workers = 0;  // 0: hardware concurrency
  std::function<void(std::size_t done, std::size_t total)> progress;
};

AttackBitStore run_attack_matrix(const AsGraph& graph, std::span<const PrefixGroup> groups,
                                 std::span<const Asn> adversaries, std::span<const Asn> vp_ases,
                                 const RoaSet& roas, std::span<const RpkiMode> modes,
                                 const MatrixOptions& options = {});

/// Uniform sample of `n` distinct ASes, sorted. Deterministic per seed.
std::vector<Asn> sample_adversaries(const AsGraph& graph, std::size_t n, std::uint64_t seed);

}  // namespace mvres
