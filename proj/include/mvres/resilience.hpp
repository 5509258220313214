#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mvres/attack.hpp"
#include "mvres/dns_surface.hpp"
#include "mvres/topology.hpp"

namespace mvres {

enum class VpRole : std::uint8_t { primary, remote };

struct VantagePoint {
  std::string id;
  Asn host_as = 0;
  std::string region;
  VpRole role = VpRole::remote;

  bool operator==(const VantagePoint&) const = default;
};

/// A validated VP set: unique ids, exactly one primary. The primary is kept
/// first, remotes follow in the order given.
class Deployment {
 public:
  Deployment() = default;
  explicit Deployment(std::vector<VantagePoint> vps);

  const std::vector<VantagePoint>& vps() const noexcept { return vps_; }
  const VantagePoint& primary() const { return vps_.front(); }
  std::size_t size() const noexcept { return vps_.size(); }
  const VantagePoint* find(std::string_view id) const;

  /// Copy with `vp` appended as a remote. Throws InputError on a duplicate id.
  Deployment with_remote(VantagePoint vp) const;

  /// `id@asn/region` joined by `;`, primary first.
  std::string describe() const;

  bool operator==(const Deployment&) const = default;

 private:
  std::vector<VantagePoint> vps_;
};

/// CSV `vp_id,host_asn,region,role` with role `primary` or `remote`.
Deployment load_deployment(std::istream& in);

struct QuorumPolicy {
  enum class Kind : std::uint8_t { full, allow_remote_failures };

  Kind kind = Kind::full;
  unsigned remote_failures = 0;
  /// When false the primary counts as one more VP that may fail.
  bool primary_mandatory = true;

  static QuorumPolicy full() { return {}; }
  static QuorumPolicy allow_remote_failures(unsigned f) { return {Kind::allow_remote_failures, f, true}; }

  /// `full`, `f=N`, with a `+any` suffix when the primary is not mandatory.
  std::string str() const;

  bool operator==(const QuorumPolicy&) const = default;
};

/// Accepts `full`, `f=N` and `fN`, optionally suffixed `+any`.
QuorumPolicy parse_quorum_policy(std::string_view text);

/// `hijacked[i]` refers to `deployment.vps()[i]`.
bool quorum_satisfied(const QuorumPolicy& policy, std::span<const bool> hijacked, const Deployment& deployment);
bool quorum_satisfied(const QuorumPolicy& policy, const std::set<std::string>& hijacked_ids,
                      const Deployment& deployment);

struct TargetIp {
  IpAddress ip;
  std::optional<std::uint32_t> group;  // nullopt: no covering prefix

  bool operator==(const TargetIp&) const = default;
};

/// Per-region target lists of one domain with their prefix groups.
struct DomainTargets {
  std::string domain;
  std::map<std::string, std::vector<TargetIp>> by_region;

  /// Targets seen by VPs in `region`; falls back to a region named "all".
  /// nullptr when neither exists.
  const std::vector<TargetIp>* for_region(const std::string& region) const;
  std::size_t unroutable_count() const;
};

/// Maps each surface's target IPs (or only its A/AAAA records) to prefix
/// groups. Surfaces must all belong to one domain.
DomainTargets build_domain_targets(std::span<const AttackSurface> surfaces, const GroupIndex& groups,
                                   bool a_records_only = false);

/// 1 iff some target of the VP's region is hijackable from the adversary at
/// the VP. Unroutable targets contribute 0. Throws ConsistencyError when the
/// adversary, a target group, the VP's AS or the regime is absent from
/// `bits`, and when no target list exists for the VP's region.
bool alpha_star(const AttackBitStore& bits, const DomainTargets& targets, Asn adversary, const VantagePoint& vp,
                RpkiMode regime);

/// gamma = 1 - successes / |adversaries|, where an adversary succeeds when
/// the VPs it hijacks satisfy the quorum.
double domain_resilience(const AttackBitStore& bits, const DomainTargets& targets, const Deployment& deployment,
                         const QuorumPolicy& policy, std::span<const Asn> adversaries, RpkiMode regime);

struct Scenario {
  std::string id;
  Deployment deployment;
  QuorumPolicy policy;
  RpkiMode regime = RpkiMode::none;

  bool operator==(const Scenario&) const = default;
};

struct ScenarioSummary {
  double median = 0;  // lower median
  double mean = 0;
  /// cdf[t]: fraction of domains with gamma <= t/100, t = 0..100.
  std::vector<double> cdf;
};

struct SkippedDomain {
  std::string domain;
  std::string reason;
};

struct ResilienceReport {
  std::vector<Scenario> scenarios;
  std::size_t adversary_count = 0;
  /// Domains that were evaluated, in input order.
  std::vector<std::string> domains;
  /// survivors[d][s]: adversaries that fail to satisfy scenario s against
  /// domain d. gamma = survivors / adversary_count.
  std::vector<std::vector<std::uint32_t>> survivors;
  std::vector<ScenarioSummary> summaries;
  std::vector<SkippedDomain> skipped;
  std::size_t target_ip_count = 0;
  std::size_t unroutable_ip_count = 0;
  /// Domains where some VP had no routable target.
  std::vector<std::string> empty_target_domains;

  double gamma(std::size_t domain, std::size_t scenario) const {
    return static_cast<double>(survivors[domain][scenario]) / static_cast<double>(adversary_count);
  }
};

struct BatchOptions {
  bool a_records_only = false;
  unsigned workers = 0;
};

/// Surfaces keyed by domain then region. Records carrying an error mark the
/// domain as skipped.
using SurfaceCatalog = std::map<std::string, std::map<std::string, SurfaceRecord>>;
SurfaceCatalog catalog_surfaces(std::span<const SurfaceRecord> records);

/// Evaluates every scenario on every domain. A domain without a usable
/// surface for some VP region is skipped and listed with the reason.
ResilienceReport batch_resilience(std::span<const std::string> domains, std::span<const Scenario> scenarios,
                                  const SurfaceCatalog& surfaces, const AttackBitStore& bits,
                                  std::span<const Asn> adversaries, const BatchOptions& options = {});

double lower_median(std::vector<double> values);

/// `domain,scenario_id,gamma`
void write_gamma_csv(const ResilienceReport& report, std::ostream& out);
/// `scenario_id,policy,regime,vantage_points`
void write_scenario_manifest(const ResilienceReport& report, std::ostream& out);
/// `scenario_id,domains,median_gamma,mean_gamma`
void write_summary_csv(const ResilienceReport& report, std::ostream& out);
/// `scenario_id,threshold,fraction_at_or_below`
void write_cdf_csv(const ResilienceReport& report, std::ostream& out);
/// `domain,reason`
void write_skipped_csv(const ResilienceReport& report, std::ostream& out);

}  // namespace mvres
