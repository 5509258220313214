#include "support/resilience_oracle.hpp"

#include <algorithm>

#include "support/stable_state_oracle.hpp"
#include "support/synthetic.hpp"

namespace mvres::testing {
namespace {

const PrefixEntry* linear_match(std::span<const PrefixEntry> prefixes, const IpAddress& ip) {
  const PrefixEntry* best = nullptr;
  for (const auto& e : prefixes) {
    if (e.prefix.contains(ip) && (!best || e.prefix.length() > best->prefix.length())) best = &e;
  }
  return best;
}

bool roa_covers(const RoaSet& roas, const Prefix& p) {
  return std::any_of(roas.records().begin(), roas.records().end(), [&](const RoaRecord& r) {
    return r.prefix.family() == p.family() && r.prefix.length() <= p.length() && r.prefix.contains(p.network());
  });
}

bool hijacks_vp(const AsGraph& graph, const PrefixEntry& entry, const RoaSet& roas, Asn adversary, Asn vp,
                RpkiMode regime) {
  const Asn origin = *std::min_element(entry.origins.begin(), entry.origins.end());
  if (adversary == origin) {
    const Announcement only[] = {Announcement::legitimate(origin)};
    return stable_state_oracle(graph, only).route(vp).has_value();
  }
  const bool prepend = regime == RpkiMode::full || (regime == RpkiMode::current && roa_covers(roas, entry.prefix));
  const Announcement anns[] = {Announcement::legitimate(origin),
                               prepend ? Announcement::prepend_hijack(adversary, origin)
                                       : Announcement::plain_hijack(adversary)};
  const auto state = stable_state_oracle(graph, anns);
  const auto& route = state.route(vp);
  return route && route->announcement == 1;
}

}  // namespace

bool reference_quorum(const QuorumPolicy& policy, const Deployment& deployment,
                      const std::set<std::string>& hijacked) {
  if (hijacked.empty()) return false;
  std::size_t unhijacked = 0;
  for (const auto& vp : deployment.vps()) unhijacked += hijacked.contains(vp.id) ? 0 : 1;
  if (policy.kind == QuorumPolicy::Kind::full) return unhijacked == 0;
  if (policy.primary_mandatory && !hijacked.contains(deployment.primary().id)) return false;
  return unhijacked <= policy.remote_failures;
}

double brute_force_gamma(const AsGraph& graph, std::span<const PrefixEntry> prefixes, const RoaSet& roas,
                         std::span<const AttackSurface> surfaces, const Deployment& deployment,
                         const QuorumPolicy& policy, std::span<const Asn> adversaries, RpkiMode regime,
                         bool a_records_only) {
  auto surface_for = [&](const std::string& region) -> const AttackSurface& {
    for (const auto& s : surfaces) {
      if (s.region == region) return s;
    }
    for (const auto& s : surfaces) {
      if (s.region == "all") return s;
    }
    throw std::logic_error("no surface for " + region);
  };
  std::size_t successes = 0;
  for (Asn a : adversaries) {
    std::set<std::string> hijacked;
    for (const auto& vp : deployment.vps()) {
      const auto& s = surface_for(vp.region);
      for (const auto& ip : a_records_only ? s.a_record_ips : s.target_ips) {
        const auto* entry = linear_match(prefixes, ip);
        if (entry && hijacks_vp(graph, *entry, roas, a, vp.host_as, regime)) {
          hijacked.insert(vp.id);
          break;
        }
      }
    }
    if (reference_quorum(policy, deployment, hijacked)) ++successes;
  }
  return static_cast<double>(adversaries.size() - successes) / static_cast<double>(adversaries.size());
}

PipelineInstance random_pipeline(std::mt19937_64& rng, std::size_t max_ases, std::size_t domains) {
  PipelineInstance inst;
  do {
    inst.graph = random_small_topology(rng, max_ases);
  } while (inst.graph.size() < 3);
  const auto nodes = inst.graph.nodes();

  const std::size_t prefix_count = 2 + pick(rng, 5);
  std::vector<RoaRecord> roas;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> blocks;  // base address, size
  for (std::size_t i = 0; i < prefix_count; ++i) {
    PrefixEntry e{Prefix(IpAddress::v4(0x0A000000U + static_cast<std::uint32_t>(i << 16)), 16),
                  {nodes[pick(rng, nodes.size())]}};
    if (chance(rng, 0.2)) e.origins.push_back(nodes[pick(rng, nodes.size())]);
    std::sort(e.origins.begin(), e.origins.end());
    e.origins.erase(std::unique(e.origins.begin(), e.origins.end()), e.origins.end());
    if (chance(rng, 0.5)) roas.push_back({e.origins.front(), e.prefix, 24});
    inst.prefixes.push_back(e);
    blocks.emplace_back(0x0A000000U + static_cast<std::uint32_t>(i << 16), 65536U);
    // A more specific prefix inside the /16 exercises longest match.
    if (chance(rng, 0.3)) {
      PrefixEntry inner{Prefix(IpAddress::v4(0x0A000000U + static_cast<std::uint32_t>(i << 16) + 0x100U), 24),
                        {nodes[pick(rng, nodes.size())]}};
      inst.prefixes.push_back(inner);
      blocks.emplace_back(0x0A000000U + static_cast<std::uint32_t>(i << 16) + 0x100U, 256U);
    }
  }
  inst.roas = RoaSet(std::move(roas));
  inst.regions = {"r-east", "r-west"};

  auto random_ip = [&]() {
    if (chance(rng, 0.1)) return IpAddress::v4(0xC6336400U + static_cast<std::uint32_t>(pick(rng, 256)));
    const auto& [base, size] = blocks[pick(rng, blocks.size())];
    return IpAddress::v4(base + static_cast<std::uint32_t>(pick(rng, size)));
  };

  for (std::size_t d = 0; d < domains; ++d) {
    std::vector<AttackSurface> per_region;
    const auto domain = "d" + std::to_string(d) + ".test";
    for (const auto& region : inst.regions) {
      AttackSurface s;
      s.domain = domain;
      s.region = region;
      const std::size_t a_count = 1 + pick(rng, 2);
      for (std::size_t i = 0; i < a_count; ++i) s.a_record_ips.insert(random_ip());
      const std::size_t ns_count = pick(rng, 4);
      for (std::size_t i = 0; i < ns_count; ++i) s.nameserver_ips.insert(random_ip());
      s.target_ips = s.a_record_ips;
      s.target_ips.insert(s.nameserver_ips.begin(), s.nameserver_ips.end());
      per_region.push_back(std::move(s));
    }
    inst.surfaces.push_back(std::move(per_region));
  }

  for (int k = 0; k < 3; ++k) {
    std::vector<VantagePoint> vps;
    const std::size_t count = 1 + pick(rng, 4);
    for (std::size_t i = 0; i < count; ++i) {
      vps.push_back({"vp" + std::to_string(i), nodes[pick(rng, nodes.size())],
                     inst.regions[pick(rng, inst.regions.size())], i == 0 ? VpRole::primary : VpRole::remote});
    }
    inst.deployments.emplace_back(std::move(vps));
  }
  return inst;
}

AttackBitStore simulate_instance(const PipelineInstance& inst, unsigned workers) {
  const PrefixTable table(inst.prefixes);
  const auto groups = split_groups_by_roa_coverage(group_prefixes_by_origin(table), inst.roas);
  std::vector<Asn> vp_ases;
  for (const auto& d : inst.deployments) {
    for (const auto& vp : d.vps()) vp_ases.push_back(vp.host_as);
  }
  std::sort(vp_ases.begin(), vp_ases.end());
  vp_ases.erase(std::unique(vp_ases.begin(), vp_ases.end()), vp_ases.end());
  const std::vector<Asn> adversaries(inst.graph.nodes().begin(), inst.graph.nodes().end());
  MatrixOptions options;
  options.workers = workers;
  return run_attack_matrix(inst.graph, groups, adversaries, vp_ases, inst.roas, kAllRpkiModes, options);
}

SurfaceCatalog instance_catalog(const PipelineInstance& inst) {
  std::vector<SurfaceRecord> records;
  for (const auto& per_region : inst.surfaces) {
    for (const auto& s : per_region) records.push_back({s, std::nullopt});
  }
  return catalog_surfaces(records);
}

std::vector<std::string> instance_domains(const PipelineInstance& inst) {
  std::vector<std::string> out;
  for (const auto& per_region : inst.surfaces) out.push_back(per_region.front().domain);
  return out;
}

}  // namespace mvres::testing
