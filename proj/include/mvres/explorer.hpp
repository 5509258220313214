#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvres/resilience.hpp"

namespace mvres {

struct Datacenter {
  std::string id;
  std::string provider;  // aws, gcp, azure or other
  std::string location;
  Asn host_as = 0;
  std::string region;  // selects the surface used by a VP placed here
  std::vector<Asn> peers;  // sorted; empty when no peer data was given

  bool operator==(const Datacenter&) const = default;
};

class DatacenterCatalog {
 public:
  DatacenterCatalog() = default;
  /// Throws InputError on duplicate ids or an unknown provider. Entries are
  /// kept sorted by id.
  explicit DatacenterCatalog(std::vector<Datacenter> entries);

  const std::vector<Datacenter>& entries() const noexcept { return entries_; }
  const Datacenter* find(std::string_view id) const;

  /// Attaches peer sets by datacenter id. Throws InputError when a peer set
  /// names an unknown datacenter or a different host AS.
  void attach_peers(std::span<const DatacenterPeerSet> peer_sets);

 private:
  std::vector<Datacenter> entries_;
};

/// CSV `datacenter_id,provider,location,host_asn,region`.
DatacenterCatalog load_datacenter_catalog(std::istream& in);

enum class CloudConstraint : std::uint8_t { single_cloud, multi_cloud, any };

std::string_view to_string(CloudConstraint c);
CloudConstraint parse_cloud_constraint(std::string_view text);

struct DeploymentConfig {
  Deployment base;
  std::vector<std::string> additions;  // datacenter ids, ascending
  QuorumPolicy policy;
  RpkiMode regime = RpkiMode::none;
  CloudConstraint constraint = CloudConstraint::any;

  /// `<policy>|<regime>|<constraint>|<addition>+<addition>...`, with `base`
  /// in place of an empty addition list.
  std::string id() const;
  /// The base with one remote VP per addition, named after the datacenter.
  Deployment deployment(const DatacenterCatalog& catalog) const;
};

/// Every size-k set of catalog datacenters not already in the base (matched
/// by VP id) satisfying the constraint, crossed with the policies. With
/// single_cloud all additions share `base_provider`. Ordered by policy
/// position, then additions lexicographically.
std::vector<DeploymentConfig> enumerate_configs(const DatacenterCatalog& catalog, const Deployment& base,
                                                std::size_t k, std::span<const QuorumPolicy> policies,
                                                CloudConstraint constraint, const std::string& base_provider,
                                                RpkiMode regime);

struct RankedConfig {
  DeploymentConfig config;
  std::string id;
  double median = 0;
  double mean = 0;
};

struct RankInputs {
  std::span<const std::string> domains;
  const SurfaceCatalog* surfaces = nullptr;
  const AttackBitStore* bits = nullptr;
  std::span<const Asn> adversaries;
  BatchOptions options;
};

/// Sorted by median gamma descending, then mean descending, fewer additions,
/// then id. `skipped` receives domains the batch could not evaluate.
std::vector<RankedConfig> rank_configs(std::span<const DeploymentConfig> configs, const DatacenterCatalog& catalog,
                                       const RankInputs& inputs, std::vector<SkippedDomain>* skipped = nullptr);

/// `rank,config_id,additions,quorum,constraint,regime,median_gamma,mean_gamma`
void write_ranked_csv(std::span<const RankedConfig> ranked, std::ostream& out);

/// Best configuration per (additions, quorum, constraint):
/// `additions,quorum,constraint,median_gamma`, ordered by those keys.
void write_grid_csv(std::span<const RankedConfig> ranked, std::ostream& out);

/// |P1 and P2| / max(|P1|, |P2|). Throws InputError on an empty set.
double peer_overlap(std::span<const Asn> peers_a, std::span<const Asn> peers_b);

/// Mean peer overlap per provider pair over datacenters with peer data.
/// Intra-provider cells exclude self pairs and are absent with fewer than
/// two datacenters. Keys are ordered (first <= second).
std::map<std::pair<std::string, std::string>, double> provider_overlap_matrix(const DatacenterCatalog& catalog);

/// `provider_a,provider_b,mean_overlap`, both orientations of each pair.
void write_overlap_csv(const std::map<std::pair<std::string, std::string>, double>& matrix, std::ostream& out);

}  // namespace mvres
