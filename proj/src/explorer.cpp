#include "mvres/explorer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "mvres/error.hpp"
#include "text.hpp"

namespace mvres {
namespace {

bool known_provider(std::string_view p) { return p == "aws" || p == "gcp" || p == "azure" || p == "other"; }

}  // namespace

DatacenterCatalog::DatacenterCatalog(std::vector<Datacenter> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const Datacenter& a, const Datacenter& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.id.empty()) throw InputError("datacenter with empty id");
    if (i > 0 && entries_[i - 1].id == e.id) throw InputError("duplicate datacenter id " + e.id);
    if (!known_provider(e.provider)) {
      throw InputError("datacenter " + e.id + ": unknown provider '" + e.provider + "'");
    }
  }
}

const Datacenter* DatacenterCatalog::find(std::string_view id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const Datacenter& d, std::string_view key) { return d.id < key; });
  return it != entries_.end() && it->id == id ? &*it : nullptr;
}

void DatacenterCatalog::attach_peers(std::span<const DatacenterPeerSet> peer_sets) {
  for (const auto& set : peer_sets) {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const Datacenter& d) { return d.id == set.datacenter_id; });
    if (it == entries_.end()) throw InputError("peer data for unknown datacenter " + set.datacenter_id);
    if (it->host_as != set.host_as) {
      throw InputError(fmt::format("datacenter {}: catalog host AS{} but peer data names AS{}", it->id, it->host_as,
                                   set.host_as));
    }
    it->peers = set.peers;
  }
}

DatacenterCatalog load_datacenter_catalog(std::istream& in) {
  std::vector<Datacenter> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 5) throw IngestError(line_no, "expected datacenter_id,provider,location,host_asn,region");
    if (fields[0] == "datacenter_id") continue;
    Datacenter d;
    d.id = std::string(fields[0]);
    d.provider = std::string(fields[1]);
    d.location = std::string(fields[2]);
    const auto asn = text::parse_int<Asn>(fields[3]);
    if (!asn) throw IngestError(line_no, "invalid AS number '" + std::string(fields[3]) + "'");
    d.host_as = *asn;
    d.region = std::string(fields[4]);
    if (d.id.empty() || d.region.empty()) throw IngestError(line_no, "empty datacenter id or region");
    if (!known_provider(d.provider)) throw IngestError(line_no, "unknown provider '" + d.provider + "'");
    entries.push_back(std::move(d));
  }
  try {
    return DatacenterCatalog(std::move(entries));
  } catch (const InputError& e) {
    throw IngestError(0, e.what());
  }
}

std::string_view to_string(CloudConstraint c) {
  switch (c) {
    case CloudConstraint::single_cloud: return "single_cloud";
    case CloudConstraint::multi_cloud: return "multi_cloud";
    case CloudConstraint::any: return "any";
  }
  return "any";
}

CloudConstraint parse_cloud_constraint(std::string_view text) {
  for (auto c : {CloudConstraint::single_cloud, CloudConstraint::multi_cloud, CloudConstraint::any}) {
    if (to_string(c) == text) return c;
  }
  throw InputError("unknown constraint '" + std::string(text) + "' (single_cloud, multi_cloud, any)");
}

std::string DeploymentConfig::id() const {
  std::string adds;
  for (const auto& a : additions) {
    if (!adds.empty()) adds += '+';
    adds += a;
  }
  return fmt::format("{}|{}|{}|{}", policy.str(), to_string(regime), to_string(constraint),
                     adds.empty() ? "base" : adds);
}

Deployment DeploymentConfig::deployment(const DatacenterCatalog& catalog) const {
  Deployment d = base;
  for (const auto& id : additions) {
    const auto* dc = catalog.find(id);
    if (!dc) throw InputError("unknown datacenter " + id);
    d = d.with_remote({dc->id, dc->host_as, dc->region, VpRole::remote});
  }
  return d;
}

std::vector<DeploymentConfig> enumerate_configs(const DatacenterCatalog& catalog, const Deployment& base,
                                                std::size_t k, std::span<const QuorumPolicy> policies,
                                                CloudConstraint constraint, const std::string& base_provider,
                                                RpkiMode regime) {
  if (constraint == CloudConstraint::single_cloud && base_provider.empty()) {
    throw InputError("single_cloud needs the base deployment's provider");
  }
  std::vector<std::string> candidates;
  for (const auto& dc : catalog.entries()) {
    if (base.find(dc.id)) continue;
    if (constraint == CloudConstraint::single_cloud && dc.provider != base_provider) continue;
    candidates.push_back(dc.id);
  }
  if (k > candidates.size()) {
    throw InputError(fmt::format("cannot add {} datacenters: only {} available under {}", k, candidates.size(),
                                 to_string(constraint)));
  }
  std::vector<std::vector<std::string>> combos;
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  while (true) {
    std::vector<std::string> combo;
    for (auto i : pick) combo.push_back(candidates[i]);
    combos.push_back(std::move(combo));
    // Advance to the next combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == candidates.size() - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  std::vector<DeploymentConfig> out;
  out.reserve(combos.size() * policies.size());
  for (const auto& policy : policies) {
    for (const auto& combo : combos) out.push_back({base, combo, policy, regime, constraint});
  }
  return out;
}

std::vector<RankedConfig> rank_configs(std::span<const DeploymentConfig> configs, const DatacenterCatalog& catalog,
                                       const RankInputs& inputs, std::vector<SkippedDomain>* skipped) {
  if (!inputs.surfaces || !inputs.bits) throw InputError("rank_configs needs surfaces and a bit store");
  std::vector<Scenario> scenarios;
  scenarios.reserve(configs.size());
  for (const auto& c : configs) scenarios.push_back({c.id(), c.deployment(catalog), c.policy, c.regime});
  const auto report =
      batch_resilience(inputs.domains, scenarios, *inputs.surfaces, *inputs.bits, inputs.adversaries, inputs.options);
  if (skipped) *skipped = report.skipped;
  if (report.domains.empty()) throw InputError("no domain could be evaluated");

  std::vector<RankedConfig> ranked;
  ranked.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    ranked.push_back({configs[i], scenarios[i].id, report.summaries[i].median, report.summaries[i].mean});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedConfig& a, const RankedConfig& b) {
    if (a.median != b.median) return a.median > b.median;
    if (a.mean != b.mean) return a.mean > b.mean;
    if (a.config.additions.size() != b.config.additions.size()) {
      return a.config.additions.size() < b.config.additions.size();
    }
    return a.id < b.id;
  });
  return ranked;
}

void write_ranked_csv(std::span<const RankedConfig> ranked, std::ostream& out) {
  out << "rank,config_id,additions,quorum,constraint,regime,median_gamma,mean_gamma\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& r = ranked[i];
    out << fmt::format("{},{},{},{},{},{},{},{}\n", i + 1, r.id, r.config.additions.size(), r.config.policy.str(),
                       to_string(r.config.constraint), to_string(r.config.regime), r.median, r.mean);
  }
}

void write_grid_csv(std::span<const RankedConfig> ranked, std::ostream& out) {
  // Ranked order means the first hit per cell is the best configuration.
  std::map<std::tuple<std::size_t, std::string, std::string>, double> grid;
  for (const auto& r : ranked) {
    grid.emplace(std::make_tuple(r.config.additions.size(), r.config.policy.str(),
                                 std::string(to_string(r.config.constraint))),
                 r.median);
  }
  out << "additions,quorum,constraint,median_gamma\n";
  for (const auto& [key, median] : grid) {
    out << fmt::format("{},{},{},{}\n", std::get<0>(key), std::get<1>(key), std::get<2>(key), median);
  }
}

double peer_overlap(std::span<const Asn> peers_a, std::span<const Asn> peers_b) {
  const std::set<Asn> a(peers_a.begin(), peers_a.end());
  const std::set<Asn> b(peers_b.begin(), peers_b.end());
  if (a.empty() || b.empty()) throw InputError("peer overlap of an empty peer set");
  std::size_t common = 0;
  for (auto x : a) common += b.count(x);
  return static_cast<double>(common) / static_cast<double>(std::max(a.size(), b.size()));
}

std::map<std::pair<std::string, std::string>, double> provider_overlap_matrix(const DatacenterCatalog& catalog) {
  std::vector<const Datacenter*> with_peers;
  for (const auto& dc : catalog.entries()) {
    if (!dc.peers.empty()) with_peers.push_back(&dc);
  }
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < with_peers.size(); ++i) {
    for (std::size_t j = i + 1; j < with_peers.size(); ++j) {
      auto key = std::minmax(with_peers[i]->provider, with_peers[j]->provider);
      auto& [sum, n] = sums[{key.first, key.second}];
      sum += peer_overlap(with_peers[i]->peers, with_peers[j]->peers);
      ++n;
    }
  }
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& [key, acc] : sums) out[key] = acc.first / static_cast<double>(acc.second);
  return out;
}

void write_overlap_csv(const std::map<std::pair<std::string, std::string>, double>& matrix, std::ostream& out) {
  std::map<std::pair<std::string, std::string>, double> both(matrix.begin(), matrix.end());
  for (const auto& [key, v] : matrix) both[{key.second, key.first}] = v;
  out << "provider_a,provider_b,mean_overlap\n";
  for (const auto& [key, v] : both) out << fmt::format("{},{},{}\n", key.first, key.second, v);
}

}  // namespace mvres
