#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvres/error.hpp"
#include "mvres/ip.hpp"

namespace mvres {

/// The six AWS regions DNS lookups are issued from by default.
inline constexpr std::array<std::string_view, 6> kMeasurementRegions = {
    "us-east-2", "us-west-2", "eu-west-3", "eu-central-1", "ap-southeast-1", "ap-northeast-1"};

/// Referral for a zone cut as seen in the parent zone's response.
struct Delegation {
  std::vector<std::string> nameservers;
  std::map<std::string, std::vector<IpAddress>> glue;
  /// A DS record for the child accompanied the referral.
  bool ds_present = false;
};

struct AddressAnswer {
  std::vector<IpAddress> a;
  std::vector<IpAddress> aaaa;
  std::optional<std::string> cname;
};

/// Source of delegation and address data. Fixture implementations are
/// deterministic per (name, region, attempt); live ones query the network.
class ZoneOracle {
 public:
  virtual ~ZoneOracle() = default;

  /// The referral for `zone` if `zone` is a zone cut, nullopt otherwise.
  /// Never asked about the root.
  virtual std::optional<Delegation> delegation(const std::string& zone, const std::string& region) = 0;

  /// Answer for `name` from its authoritative zone, nullopt if the name does
  /// not exist. `attempt` distinguishes repeated lookups of the same name.
  virtual std::optional<AddressAnswer> address_records(const std::string& name, const std::string& region,
                                                       int attempt) = 0;
};

struct AttackSurface {
  std::string domain;
  std::string region;
  std::set<IpAddress> target_ips;      // a_record_ips plus nameserver_ips
  std::set<IpAddress> a_record_ips;
  std::set<IpAddress> nameserver_ips;
  std::set<std::string> dnssec_cut_zones;
  std::set<std::string> glueless_names;

  bool operator==(const AttackSurface&) const = default;
};

struct SurfaceOptions {
  int repeats = 10;
  /// When false every non-root zone contributes, signed or not.
  bool honor_dnssec = true;
  int max_depth = 10;
  int max_cname_links = 8;
};

class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& message, AttackSurface partial)
      : Error("resolution", message), partial_(std::move(partial)) {}

  const AttackSurface& partial() const noexcept { return partial_; }

 private:
  AttackSurface partial_;
};

/// Lower-cases, strips a trailing dot and checks label syntax. The root is
/// ".". Throws InputError for malformed names.
std::string normalize_name(std::string_view name);

/// Full-graph attack surface of `domain` from `region`: every address that
/// may be contacted to resolve it, plus its A/AAAA records, unioned over
/// `options.repeats` lookups. The root never contributes; a zone whose
/// referral carried a DS record contributes nothing; other zones contribute
/// their nameservers' glue, or for glueless nameservers the surface of
/// resolving the nameserver name. CNAMEs are followed and every name on the
/// chain contributes its resolution surface.
///
/// Throws ResolutionError (with the partial surface) when no address is
/// found, a zone has no usable nameserver, a CNAME loop or depth limit is
/// hit.
AttackSurface resolve_attack_surface(ZoneOracle& oracle, std::string_view domain, const std::string& region,
                                     const SurfaceOptions& options = {});

/// Addresses a resolver may contact for nameserver `ns_name`: the glue when
/// present, otherwise the full surface of resolving the name.
std::set<IpAddress> nameserver_surface(ZoneOracle& oracle, std::string_view ns_name,
                                       const std::optional<std::vector<IpAddress>>& glue,
                                       const std::string& region, const SurfaceOptions& options = {});

/// Field-wise union; region becomes "all". Throws InputError on mixed domains.
AttackSurface surface_union_across_regions(std::span<const AttackSurface> surfaces);

/// One line of the surface log: a resolved surface, or the partial surface
/// and reason for a failed domain.
struct SurfaceRecord {
  AttackSurface surface;
  std::optional<std::string> error;

  bool operator==(const SurfaceRecord&) const = default;
};

/// JSON object per line.
void write_surface_record(const SurfaceRecord& record, std::ostream& out);
std::vector<SurfaceRecord> read_surface_log(std::istream& in);

}  // namespace mvres
