#include "mvres/resilience.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "mvres/error.hpp"
#include "mvres/parallel.hpp"
#include "text.hpp"

namespace mvres {

Deployment::Deployment(std::vector<VantagePoint> vps) {
  if (vps.empty()) throw InputError("deployment has no vantage points");
  std::set<std::string> ids;
  const VantagePoint* primary = nullptr;
  for (const auto& vp : vps) {
    if (vp.id.empty()) throw InputError("vantage point with empty id");
    if (!ids.insert(vp.id).second) throw InputError("duplicate vantage point id " + vp.id);
    if (vp.role == VpRole::primary) {
      if (primary) throw InputError("deployment has two primaries: " + primary->id + " and " + vp.id);
      primary = &vp;
    }
  }
  if (!primary) throw InputError("deployment has no primary vantage point");
  vps_.push_back(*primary);
  for (const auto& vp : vps) {
    if (vp.role == VpRole::remote) vps_.push_back(vp);
  }
}

const VantagePoint* Deployment::find(std::string_view id) const {
  for (const auto& vp : vps_) {
    if (vp.id == id) return &vp;
  }
  return nullptr;
}

Deployment Deployment::with_remote(VantagePoint vp) const {
  auto vps = vps_;
  vp.role = VpRole::remote;
  vps.push_back(std::move(vp));
  return Deployment(std::move(vps));
}

std::string Deployment::describe() const {
  std::string out;
  for (const auto& vp : vps_) {
    if (!out.empty()) out += ';';
    out += fmt::format("{}@{}/{}", vp.id, vp.host_as, vp.region);
  }
  return out;
}

Deployment load_deployment(std::istream& in) {
  std::vector<VantagePoint> vps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 4) throw IngestError(line_no, "expected vp_id,host_asn,region,role");
    if (fields[0] == "vp_id") continue;
    VantagePoint vp;
    vp.id = std::string(fields[0]);
    const auto asn = text::parse_int<Asn>(fields[1]);
    if (!asn) throw IngestError(line_no, "invalid AS number '" + std::string(fields[1]) + "'");
    vp.host_as = *asn;
    vp.region = std::string(fields[2]);
    if (vp.region.empty()) throw IngestError(line_no, "empty region");
    if (fields[3] == "primary") {
      vp.role = VpRole::primary;
    } else if (fields[3] == "remote") {
      vp.role = VpRole::remote;
    } else {
      throw IngestError(line_no, "role must be primary or remote");
    }
    vps.push_back(std::move(vp));
  }
  try {
    return Deployment(std::move(vps));
  } catch (const InputError& e) {
    throw IngestError(0, e.what());
  }
}

std::string QuorumPolicy::str() const {
  std::string out = kind == Kind::full ? "full" : fmt::format("f={}", remote_failures);
  if (!primary_mandatory) out += "+any";
  return out;
}

QuorumPolicy parse_quorum_policy(std::string_view text) {
  QuorumPolicy policy;
  auto body = text::trim(text);
  if (body.ends_with("+any")) {
    policy.primary_mandatory = false;
    body.remove_suffix(4);
  }
  if (body == "full") return policy;
  if (body.starts_with("f=")) {
    body.remove_prefix(2);
  } else if (body.starts_with("f")) {
    body.remove_prefix(1);
  } else {
    throw InputError("unknown quorum policy '" + std::string(text) + "'");
  }
  const auto f = text::parse_int<unsigned>(body);
  if (!f) throw InputError("unknown quorum policy '" + std::string(text) + "'");
  policy.kind = QuorumPolicy::Kind::allow_remote_failures;
  policy.remote_failures = *f;
  return policy;
}

bool quorum_satisfied(const QuorumPolicy& policy, std::span<const bool> hijacked, const Deployment& deployment) {
  if (hijacked.size() != deployment.size()) throw InputError("hijacked flags do not match the deployment");
  const auto count = static_cast<std::size_t>(std::count(hijacked.begin(), hijacked.end(), true));
  if (count == 0) return false;
  if (policy.kind == QuorumPolicy::Kind::full) return count == hijacked.size();
  if (policy.primary_mandatory) {
    return hijacked[0] && (hijacked.size() - count) <= policy.remote_failures;
  }
  return hijacked.size() - count <= policy.remote_failures;
}

bool quorum_satisfied(const QuorumPolicy& policy, const std::set<std::string>& hijacked_ids,
                      const Deployment& deployment) {
  for (const auto& id : hijacked_ids) {
    if (!deployment.find(id)) throw InputError("vantage point " + id + " is not in the deployment");
  }
  auto owned = std::make_unique<bool[]>(deployment.size());
  for (std::size_t i = 0; i < deployment.size(); ++i) owned[i] = hijacked_ids.contains(deployment.vps()[i].id);
  return quorum_satisfied(policy, std::span<const bool>(owned.get(), deployment.size()), deployment);
}

const std::vector<TargetIp>* DomainTargets::for_region(const std::string& region) const {
  if (auto it = by_region.find(region); it != by_region.end()) return &it->second;
  if (auto it = by_region.find("all"); it != by_region.end()) return &it->second;
  return nullptr;
}

std::size_t DomainTargets::unroutable_count() const {
  std::size_t n = 0;
  for (const auto& [region, list] : by_region) {
    n += static_cast<std::size_t>(std::count_if(list.begin(), list.end(), [](const TargetIp& t) { return !t.group; }));
  }
  return n;
}

DomainTargets build_domain_targets(std::span<const AttackSurface> surfaces, const GroupIndex& groups,
                                   bool a_records_only) {
  DomainTargets out;
  for (const auto& s : surfaces) {
    if (out.domain.empty()) out.domain = s.domain;
    if (s.domain != out.domain) throw InputError("surfaces of " + out.domain + " and " + s.domain + " mixed");
    auto& list = out.by_region[s.region];
    list.clear();
    for (const auto& ip : a_records_only ? s.a_record_ips : s.target_ips) list.push_back({ip, groups.group_of(ip)});
  }
  return out;
}

namespace {

// Store coordinates for one domain/VP/regime combination.
struct Cell {
  std::size_t vp = 0;
  std::size_t regime = 0;
  std::vector<std::size_t> groups;  // distinct group positions
};

std::size_t require(const std::optional<std::size_t>& index, const std::string& what) {
  if (!index) throw ConsistencyError(what);
  return *index;
}

Cell resolve_cell(const AttackBitStore& bits, const DomainTargets& targets, const VantagePoint& vp,
                  RpkiMode regime) {
  Cell cell;
  cell.vp = require(bits.vp_index(vp.host_as),
                    fmt::format("dimension vp: vantage point {} (AS{}) is not in the bit store", vp.id, vp.host_as));
  cell.regime = require(bits.regime_index(regime),
                        fmt::format("dimension regime: {} was not simulated", to_string(regime)));
  const auto* list = targets.for_region(vp.region);
  if (!list) {
    throw ConsistencyError(fmt::format("no targets of {} for region {}", targets.domain, vp.region));
  }
  for (const auto& t : *list) {
    if (!t.group) continue;
    cell.groups.push_back(require(bits.group_position(*t.group),
                                  fmt::format("dimension group: prefix group {} is not in the bit store", *t.group)));
  }
  std::sort(cell.groups.begin(), cell.groups.end());
  cell.groups.erase(std::unique(cell.groups.begin(), cell.groups.end()), cell.groups.end());
  return cell;
}

bool cell_bit(const AttackBitStore& bits, const Cell& cell, std::size_t adversary) {
  for (auto g : cell.groups) {
    if (bits.get(adversary, g, cell.vp, cell.regime)) return true;
  }
  return false;
}

std::vector<std::size_t> adversary_positions(const AttackBitStore& bits, std::span<const Asn> adversaries) {
  std::vector<std::size_t> out;
  out.reserve(adversaries.size());
  for (auto a : adversaries) {
    out.push_back(require(bits.adversary_index(a),
                          fmt::format("dimension adversary: AS{} is not in the bit store", a)));
  }
  return out;
}

}  // namespace

bool alpha_star(const AttackBitStore& bits, const DomainTargets& targets, Asn adversary, const VantagePoint& vp,
                RpkiMode regime) {
  const auto a = require(bits.adversary_index(adversary),
                         fmt::format("dimension adversary: AS{} is not in the bit store", adversary));
  return cell_bit(bits, resolve_cell(bits, targets, vp, regime), a);
}

double domain_resilience(const AttackBitStore& bits, const DomainTargets& targets, const Deployment& deployment,
                         const QuorumPolicy& policy, std::span<const Asn> adversaries, RpkiMode regime) {
  if (adversaries.empty()) throw InputError("adversary list is empty");
  const auto positions = adversary_positions(bits, adversaries);
  std::vector<Cell> cells;
  for (const auto& vp : deployment.vps()) cells.push_back(resolve_cell(bits, targets, vp, regime));
  auto hijacked = std::make_unique<bool[]>(cells.size());
  std::size_t successes = 0;
  for (auto a : positions) {
    for (std::size_t v = 0; v < cells.size(); ++v) hijacked[v] = cell_bit(bits, cells[v], a);
    if (quorum_satisfied(policy, std::span<const bool>(hijacked.get(), cells.size()), deployment)) ++successes;
  }
  return static_cast<double>(adversaries.size() - successes) / static_cast<double>(adversaries.size());
}

SurfaceCatalog catalog_surfaces(std::span<const SurfaceRecord> records) {
  SurfaceCatalog out;
  for (const auto& r : records) {
    auto& slot = out[r.surface.domain];
    if (slot.contains(r.surface.region)) {
      throw InputError("duplicate surface for " + r.surface.domain + " in " + r.surface.region);
    }
    slot.emplace(r.surface.region, r);
  }
  return out;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw InputError("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

namespace {

struct DomainOutcome {
  std::optional<std::string> skip_reason;
  std::vector<std::uint32_t> survivors;
  std::size_t targets = 0;
  std::size_t unroutable = 0;
  bool empty_targets = false;
};

std::optional<std::string> usable_surfaces(const std::string& domain, const SurfaceCatalog& catalog,
                                           std::span<const Scenario> scenarios,
                                           std::vector<AttackSurface>& surfaces) {
  const auto it = catalog.find(domain);
  if (it == catalog.end() || it->second.empty()) return "no surface";
  std::set<std::string> needed;
  for (const auto& s : scenarios) {
    for (const auto& vp : s.deployment.vps()) needed.insert(vp.region);
  }
  const auto& by_region = it->second;
  const bool has_all = by_region.contains("all");
  for (const auto& region : needed) {
    auto r = by_region.find(region);
    if (r == by_region.end()) {
      if (has_all) r = by_region.find("all");
      else return "no surface for region " + region;
    }
    if (r->second.error) return "resolution failed in " + r->first + ": " + *r->second.error;
  }
  for (const auto& [region, record] : by_region) {
    if (!record.error) surfaces.push_back(record.surface);
  }
  return std::nullopt;
}

}  // namespace

ResilienceReport batch_resilience(std::span<const std::string> domains, std::span<const Scenario> scenarios,
                                  const SurfaceCatalog& surfaces, const AttackBitStore& bits,
                                  std::span<const Asn> adversaries, const BatchOptions& options) {
  if (adversaries.empty()) throw InputError("adversary list is empty");
  ResilienceReport report;
  report.scenarios.assign(scenarios.begin(), scenarios.end());
  report.adversary_count = adversaries.size();

  std::vector<std::string> unique_domains;
  std::set<std::string> seen;
  for (const auto& d : domains) {
    if (seen.insert(d).second) unique_domains.push_back(d);
  }

  const auto positions = adversary_positions(bits, adversaries);
  const GroupIndex groups(bits.groups());

  std::vector<DomainOutcome> outcomes(unique_domains.size());
  parallel_for(unique_domains.size(), options.workers, [&](std::size_t d) {
    auto& outcome = outcomes[d];
    std::vector<AttackSurface> usable;
    outcome.skip_reason = usable_surfaces(unique_domains[d], surfaces, scenarios, usable);
    if (outcome.skip_reason) return;
    const auto targets = build_domain_targets(usable, groups, options.a_records_only);
    for (const auto& [region, list] : targets.by_region) outcome.targets += list.size();
    outcome.unroutable = targets.unroutable_count();

    // alpha* per (vp AS, region, regime), shared across scenarios.
    std::map<std::tuple<Asn, std::string, RpkiMode>, std::vector<char>> alpha;
    auto column = [&](const VantagePoint& vp, RpkiMode regime) -> const std::vector<char>& {
      auto key = std::make_tuple(vp.host_as, vp.region, regime);
      auto it = alpha.find(key);
      if (it != alpha.end()) return it->second;
      const auto cell = resolve_cell(bits, targets, vp, regime);
      if (cell.groups.empty()) outcome.empty_targets = true;
      std::vector<char> bits_for(positions.size());
      for (std::size_t i = 0; i < positions.size(); ++i) bits_for[i] = cell_bit(bits, cell, positions[i]);
      return alpha.emplace(std::move(key), std::move(bits_for)).first->second;
    };

    outcome.survivors.reserve(scenarios.size());
    for (const auto& scenario : scenarios) {
      const auto& vps = scenario.deployment.vps();
      std::vector<const std::vector<char>*> cols;
      for (const auto& vp : vps) cols.push_back(&column(vp, scenario.regime));
      auto hijacked = std::make_unique<bool[]>(vps.size());
      std::uint32_t survivors = 0;
      for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t v = 0; v < vps.size(); ++v) hijacked[v] = (*cols[v])[i] != 0;
        if (!quorum_satisfied(scenario.policy, std::span<const bool>(hijacked.get(), vps.size()),
                              scenario.deployment)) {
          ++survivors;
        }
      }
      outcome.survivors.push_back(survivors);
    }
  });

  for (std::size_t d = 0; d < unique_domains.size(); ++d) {
    auto& outcome = outcomes[d];
    if (outcome.skip_reason) {
      report.skipped.push_back({unique_domains[d], *outcome.skip_reason});
      continue;
    }
    report.domains.push_back(unique_domains[d]);
    report.survivors.push_back(std::move(outcome.survivors));
    report.target_ip_count += outcome.targets;
    report.unroutable_ip_count += outcome.unroutable;
    if (outcome.empty_targets) report.empty_target_domains.push_back(unique_domains[d]);
  }

  const auto n = report.domains.size();
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    ScenarioSummary summary;
    if (n > 0) {
      std::vector<double> gammas;
      std::vector<std::uint32_t> counts;
      for (std::size_t d = 0; d < n; ++d) {
        gammas.push_back(report.gamma(d, s));
        counts.push_back(report.survivors[d][s]);
      }
      summary.median = lower_median(gammas);
      summary.mean = std::accumulate(gammas.begin(), gammas.end(), 0.0) / static_cast<double>(n);
      // gamma <= t/100  <=>  100 * survivors <= t * |A|, evaluated exactly.
      const auto total = static_cast<std::uint64_t>(report.adversary_count);
      for (std::uint64_t t = 0; t <= 100; ++t) {
        const auto below = std::count_if(counts.begin(), counts.end(),
                                         [&](std::uint32_t c) { return 100 * std::uint64_t{c} <= t * total; });
        summary.cdf.push_back(static_cast<double>(below) / static_cast<double>(n));
      }
    }
    report.summaries.push_back(std::move(summary));
  }
  return report;
}

void write_gamma_csv(const ResilienceReport& report, std::ostream& out) {
  out << "domain,scenario_id,gamma\n";
  for (std::size_t d = 0; d < report.domains.size(); ++d) {
    for (std::size_t s = 0; s < report.scenarios.size(); ++s) {
      out << fmt::format("{},{},{}\n", report.domains[d], report.scenarios[s].id, report.gamma(d, s));
    }
  }
}

void write_scenario_manifest(const ResilienceReport& report, std::ostream& out) {
  out << "scenario_id,policy,regime,vantage_points\n";
  for (const auto& s : report.scenarios) {
    out << fmt::format("{},{},{},{}\n", s.id, s.policy.str(), to_string(s.regime), s.deployment.describe());
  }
}

void write_summary_csv(const ResilienceReport& report, std::ostream& out) {
  out << "scenario_id,domains,median_gamma,mean_gamma\n";
  for (std::size_t s = 0; s < report.scenarios.size(); ++s) {
    if (report.domains.empty()) {
      out << fmt::format("{},0,,\n", report.scenarios[s].id);
    } else {
      out << fmt::format("{},{},{},{}\n", report.scenarios[s].id, report.domains.size(), report.summaries[s].median,
                         report.summaries[s].mean);
    }
  }
}

void write_cdf_csv(const ResilienceReport& report, std::ostream& out) {
  out << "scenario_id,threshold,fraction_at_or_below\n";
  for (std::size_t s = 0; s < report.scenarios.size(); ++s) {
    const auto& cdf = report.summaries[s].cdf;
    for (std::size_t t = 0; t < cdf.size(); ++t) {
      out << fmt::format("{},{:.2f},{}\n", report.scenarios[s].id, static_cast<double>(t) / 100.0, cdf[t]);
    }
  }
}

void write_skipped_csv(const ResilienceReport& report, std::ostream& out) {
  out << "domain,reason\n";
  for (const auto& s : report.skipped) {
    std::string reason;
    for (char c : s.reason) {
      if (c == '"') reason += '"';
      reason += c;
    }
    out << fmt::format("{},\"{}\"\n", s.domain, reason);
  }
}

}  // namespace mvres
