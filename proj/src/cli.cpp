#include "mvres/cli.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>

#include "mvres/attack.hpp"
#include "mvres/dns_surface.hpp"
#include "mvres/error.hpp"
#include "mvres/explorer.hpp"
#include "mvres/live_dns.hpp"
#include "mvres/parallel.hpp"
#include "mvres/resilience.hpp"
#include "mvres/rpki.hpp"
#include "mvres/topology.hpp"
#include "mvres/zone_fixture.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mvres::cli {
namespace {

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error("usage", message) {}
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  unsigned workers = 0;
  int verbosity = 1;

  void warn(const std::string& message) const {
    if (verbosity >= 1) err << "mvres: warning: " << message << '\n';
  }
  void progress(const std::string& message) const {
    if (verbosity >= 2) err << "mvres: " << message << '\n';
  }
};

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                  std::chrono::system_clock::now())));
}

/// Opens `path` and runs `parse` on it. Errors are re-raised with the same
/// kind and the path in front, so ingest errors read `file: line N: ...`.
template <typename Parse>
auto load(const std::string& path, Parse&& parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  try {
    return parse(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw Error("io", "write failed for " + path.string());
}

/// Recorded next to every run's outputs as manifest.json.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : started_(utc_now()) {
    doc_["tool"] = "mvres";
    doc_["version"] = kVersion;
    doc_["command"] = std::move(command);
    doc_["inputs"] = json::object();
    doc_["outputs"] = json::object();
    doc_["flags"] = json::object();
  }

  void input(const std::string& name, const std::string& path) {
    doc_["inputs"][name] = {{"path", path}, {"sha256", sha256_file(path)}};
  }
  void flag(const std::string& name, json value) { doc_["flags"][name] = std::move(value); }
  void seed(std::uint64_t seed) { doc_["seed"] = seed; }

  void output(const fs::path& dir, const std::string& name, const std::function<void(std::ostream&)>& body) {
    write_file(dir / name, body);
    doc_["outputs"][name] = sha256_file((dir / name).string());
  }

  void finish(const fs::path& dir) {
    doc_["started_at"] = started_;
    doc_["finished_at"] = utc_now();
    write_file(dir / "manifest.json", [&](std::ostream& o) { o << doc_.dump(2) << '\n'; });
  }

 private:
  json doc_;
  std::string started_;
};

/// When `file` sits next to a manifest that lists it, its digest must match.
void check_against_manifest(const std::string& file) {
  const fs::path path(file);
  const auto manifest_path = path.parent_path() / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) return;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("ingest", manifest_path.string() + ": " + e.what());
  }
  const auto outputs = doc.find("outputs");
  if (outputs == doc.end() || !outputs->is_object()) return;
  const auto entry = outputs->find(path.filename().string());
  if (entry == outputs->end() || !entry->is_string()) return;
  const auto actual = sha256_file(file);
  if (entry->get<std::string>() != actual) {
    throw ConsistencyError(fmt::format("{}: digest {} differs from the {} recorded in {}", file, actual,
                                       entry->get<std::string>(), manifest_path.string()));
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io", "cannot create " + dir + ": " + ec.message());
  return fs::path(dir);
}

std::vector<RpkiMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<RpkiMode> out;
  for (const auto& n : names) {
    const auto mode = parse_rpki_mode(n);
    if (!mode) throw UsageError("unknown regime '" + n + "' (none, current, full)");
    if (std::find(out.begin(), out.end(), *mode) == out.end()) out.push_back(*mode);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<QuorumPolicy> parse_policies(const std::vector<std::string>& names) {
  std::vector<QuorumPolicy> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse_quorum_policy(n));
    } catch (const InputError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

std::vector<std::string> read_domain_file(const std::string& path) {
  return load(path, [](std::istream& in) {
    std::vector<std::string> domains;
    std::string line;
    while (std::getline(in, line)) {
      const auto begin = line.find_first_not_of(" \t\r");
      if (begin == std::string::npos || line[begin] == '#') continue;
      const auto end = line.find_last_not_of(" \t\r");
      domains.push_back(line.substr(begin, end - begin + 1));
    }
    return domains;
  });
}

/// Checks that every coordinate the scenarios will read exists in the store
/// before any work starts, naming the first missing dimension.
void check_store_covers(const AttackBitStore& bits, std::span<const VantagePoint> vps,
                        std::span<const RpkiMode> regimes) {
  for (const auto& vp : vps) {
    if (!bits.vp_index(vp.host_as)) {
      throw ConsistencyError(fmt::format("dimension vp: vantage point {} is hosted in AS{}, absent from the bit store",
                                         vp.id, vp.host_as));
    }
  }
  for (auto r : regimes) {
    if (!bits.regime_index(r)) {
      throw ConsistencyError(fmt::format("dimension regime: {} was not simulated", to_string(r)));
    }
  }
  if (bits.adversaries().empty()) throw ConsistencyError("dimension adversary: the bit store has no adversaries");
}

struct SharedInputs {
  AttackBitStore bits;
  std::vector<SurfaceRecord> records;
  SurfaceCatalog catalog;
  std::vector<std::string> domains;
};

SharedInputs load_shared(const std::string& bits_path, const std::string& surfaces_path,
                         const std::optional<std::string>& domains_path, RunManifest& manifest, const Context& ctx) {
  SharedInputs in;
  check_against_manifest(bits_path);
  check_against_manifest(surfaces_path);
  manifest.input("bits", bits_path);
  manifest.input("surfaces", surfaces_path);
  in.bits = load(bits_path, [](std::istream& s) { return AttackBitStore::read(s); });
  in.records = load(surfaces_path, [](std::istream& s) { return read_surface_log(s); });
  in.catalog = catalog_surfaces(in.records);
  if (domains_path) {
    manifest.input("domains", *domains_path);
    for (const auto& d : read_domain_file(*domains_path)) {
      try {
        in.domains.push_back(normalize_name(d));
      } catch (const InputError&) {
        in.domains.push_back(d);
      }
    }
    if (in.domains.empty()) ctx.warn("domain file " + *domains_path + " is empty; the report will be empty");
  } else {
    std::set<std::string> seen;
    for (const auto& r : in.records) {
      if (seen.insert(r.surface.domain).second) in.domains.push_back(r.surface.domain);
    }
    if (in.domains.empty()) ctx.warn("surface log " + surfaces_path + " is empty; the report will be empty");
  }
  return in;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string topology;
  std::string prefixes;
  std::optional<std::string> roas;
  std::optional<std::string> peers;
  std::vector<Asn> vp_as;
  std::vector<std::string> deployments;
  std::vector<std::string> catalogs;
  std::size_t adversaries = 100;
  bool all_adversaries = false;
  std::uint64_t seed = 1;
  std::vector<std::string> modes;
  std::string out_dir;
  bool csv = false;
};

void cmd_simulate(const SimulateArgs& a, const Context& ctx) {
  std::vector<RpkiMode> modes;
  if (a.modes.empty()) {
    modes = a.roas ? std::vector<RpkiMode>{RpkiMode::none, RpkiMode::current, RpkiMode::full}
                   : std::vector<RpkiMode>{RpkiMode::none, RpkiMode::full};
  } else {
    modes = parse_modes(a.modes);
  }
  if (!a.roas && std::find(modes.begin(), modes.end(), RpkiMode::current) != modes.end()) {
    throw InputError("current mode requires ROA input");
  }

  RunManifest manifest("simulate");
  manifest.input("topology", a.topology);
  manifest.input("prefixes", a.prefixes);
  auto graph = load(a.topology, [](std::istream& s) { return load_as_relationships(s); });
  const auto table = load(a.prefixes, [](std::istream& s) { return load_prefix_origins(s); });
  RoaSet roas;
  if (a.roas) {
    manifest.input("roas", *a.roas);
    roas = load(*a.roas, [](std::istream& s) { return load_roas(s); });
  }
  if (a.peers) {
    manifest.input("peers", *a.peers);
    const auto peers = load(*a.peers, [](std::istream& s) { return load_datacenter_peers(s); });
    graph = augment_with_datacenter_peers(graph, peers);
  }

  std::set<Asn> vps(a.vp_as.begin(), a.vp_as.end());
  for (std::size_t i = 0; i < a.deployments.size(); ++i) {
    manifest.input(fmt::format("deployment_{}", i), a.deployments[i]);
    const auto d = load(a.deployments[i], [](std::istream& s) { return load_deployment(s); });
    for (const auto& vp : d.vps()) vps.insert(vp.host_as);
  }
  for (std::size_t i = 0; i < a.catalogs.size(); ++i) {
    manifest.input(fmt::format("catalog_{}", i), a.catalogs[i]);
    const auto c = load(a.catalogs[i], [](std::istream& s) { return load_datacenter_catalog(s); });
    for (const auto& dc : c.entries()) vps.insert(dc.host_as);
  }
  if (vps.empty()) throw UsageError("no vantage points: give --vp-as, --deployment or --catalog");
  const std::vector<Asn> vp_list(vps.begin(), vps.end());

  auto groups = group_prefixes_by_origin(table);
  if (a.roas) groups = split_groups_by_roa_coverage(groups, roas);
  for (const auto& g : groups) {
    for (auto o : g.origins) {
      if (!graph.contains(o)) {
        ctx.warn(fmt::format("origin AS{} of group {} is not in the topology", o, g.id));
        break;
      }
    }
  }

  std::vector<Asn> adversaries;
  if (a.all_adversaries) {
    adversaries.assign(graph.nodes().begin(), graph.nodes().end());
  } else {
    adversaries = sample_adversaries(graph, a.adversaries, a.seed);
  }

  manifest.seed(a.seed);
  manifest.flag("modes", [&] {
    std::vector<std::string> names;
    for (auto m : modes) names.emplace_back(to_string(m));
    return names;
  }());
  manifest.flag("adversaries", a.all_adversaries ? json("all") : json(a.adversaries));
  manifest.flag("vp_as", vp_list);
  manifest.flag("csv", a.csv);

  ctx.progress(fmt::format("simulate: {} ASes, {} groups, {} adversaries, {} vantage points, {} regimes", graph.size(),
                           groups.size(), adversaries.size(), vp_list.size(), modes.size()));
  MatrixOptions options;
  options.workers = ctx.workers;
  std::mutex progress_mutex;
  std::size_t last_decile = 0;
  if (ctx.verbosity >= 2) {
    options.progress = [&](std::size_t done, std::size_t total) {
      std::lock_guard lock(progress_mutex);
      const auto decile = total ? done * 10 / total : 10;
      if (decile > last_decile || done == total) {
        last_decile = decile;
        ctx.progress(fmt::format("simulate: {}/{} done", done, total));
      }
    };
  }
  const auto bits = run_attack_matrix(graph, groups, adversaries, vp_list, roas, modes, options);

  const auto dir = prepare_out_dir(a.out_dir);
  manifest.output(dir, "attack_bits.bin", [&](std::ostream& o) { bits.write(o); });
  manifest.output(dir, "groups.csv", [&](std::ostream& o) {
    o << "group_id,roa_covered,origins,prefix\n";
    for (const auto& g : bits.groups()) {
      std::string origins;
      for (auto x : g.origins) origins += (origins.empty() ? "" : " ") + std::to_string(x);
      for (const auto& p : g.members) o << fmt::format("{},{},{},{}\n", g.id, g.roa_covered ? 1 : 0, origins, p.str());
    }
  });
  if (a.csv) manifest.output(dir, "attack_bits.csv", [&](std::ostream& o) { bits.write_csv(o); });
  manifest.flag("dimensions", {{"adversaries", bits.adversaries().size()},
                               {"groups", bits.groups().size()},
                               {"vantage_points", bits.vp_ases().size()},
                               {"regimes", bits.regimes().size()}});
  manifest.finish(dir);
  ctx.out << fmt::format("wrote {} bits ({} adversaries x {} groups x {} vantage points x {} regimes) to {}\n",
                         bits.bit_count(), bits.adversaries().size(), bits.groups().size(), bits.vp_ases().size(),
                         bits.regimes().size(), (dir / "attack_bits.bin").string());
}

// --------------------------------------------------------- resolve-surface

struct ResolveArgs {
  std::string domains;
  std::optional<std::string> fixture;
  bool live = false;
  bool allow_network = false;
  std::vector<std::string> regions;
  int repeats = 10;
  bool no_dnssec = false;
  std::string out_dir;
};

void cmd_resolve_surface(const ResolveArgs& a, const Context& ctx) {
  if (a.live == a.fixture.has_value()) throw UsageError("give exactly one of --fixture or --live");
  if (a.live && !a.allow_network) {
    throw Error("permission",
                "--live sends DNS queries to Internet nameservers; pass --allow-network to permit network access");
  }
  if (a.repeats < 1) throw UsageError("--repeats must be at least 1");

  RunManifest manifest("resolve-surface");
  manifest.input("domains", a.domains);
  const auto raw = read_domain_file(a.domains);
  std::unique_ptr<ZoneOracle> oracle;
  if (a.fixture) {
    manifest.input("fixture", *a.fixture);
    oracle = std::make_unique<FixtureZoneOracle>(
        load(*a.fixture, [](std::istream& s) { return FixtureZoneOracle::parse(s); }));
  } else {
    oracle = std::make_unique<LiveZoneOracle>();
    ctx.warn("live mode resolves from this host; region labels do not change the vantage");
  }
  std::vector<std::string> regions = a.regions;
  if (regions.empty()) regions.assign(kMeasurementRegions.begin(), kMeasurementRegions.end());

  SurfaceOptions options;
  options.repeats = a.repeats;
  options.honor_dnssec = !a.no_dnssec;
  manifest.flag("mode", a.live ? "live" : "fixture");
  manifest.flag("regions", regions);
  manifest.flag("repeats", a.repeats);
  manifest.flag("honor_dnssec", options.honor_dnssec);

  std::vector<std::string> domains;
  std::vector<std::pair<std::string, std::string>> skipped;
  std::set<std::string> seen;
  for (const auto& d : raw) {
    try {
      const auto name = normalize_name(d);
      if (seen.insert(name).second) domains.push_back(name);
    } catch (const InputError& e) {
      skipped.emplace_back(d, e.what());
    }
  }
  if (raw.empty()) ctx.warn("domain file " + a.domains + " is empty");

  // Live lookups share one socket and rate limiter, so they run serially.
  const unsigned workers = a.live ? 1 : ctx.workers;
  std::vector<SurfaceRecord> records(domains.size() * regions.size());
  std::mutex progress_mutex;
  std::size_t done = 0;
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const auto& domain = domains[i / regions.size()];
    const auto& region = regions[i % regions.size()];
    auto& rec = records[i];
    try {
      rec.surface = resolve_attack_surface(*oracle, domain, region, options);
    } catch (const ResolutionError& e) {
      rec.surface = e.partial();
      rec.error = e.what();
    } catch (const InputError& e) {
      rec.error = e.what();
    }
    rec.surface.domain = domain;
    rec.surface.region = region;
    std::lock_guard lock(progress_mutex);
    ++done;
    if (done % 100 == 0 || done == records.size()) {
      ctx.progress(fmt::format("resolve-surface: {}/{} lookups", done, records.size()));
    }
  });

  for (const auto& rec : records) {
    if (rec.error) skipped.emplace_back(rec.surface.domain, fmt::format("{}: {}", rec.surface.region, *rec.error));
  }

  const auto dir = prepare_out_dir(a.out_dir);
  manifest.output(dir, "surfaces.jsonl", [&](std::ostream& o) {
    for (const auto& rec : records) write_surface_record(rec, o);
  });
  manifest.output(dir, "skipped.csv", [&](std::ostream& o) {
    ResilienceReport r;
    for (const auto& [d, why] : skipped) r.skipped.push_back({d, why});
    write_skipped_csv(r, o);
  });
  manifest.finish(dir);
  ctx.out << fmt::format("wrote {} surface records for {} domains x {} regions ({} skipped entries) to {}\n",
                         records.size(), domains.size(), regions.size(), skipped.size(),
                         (dir / "surfaces.jsonl").string());
}

// -------------------------------------------------------------- resilience

struct ResilienceArgs {
  std::string bits;
  std::string surfaces;
  std::optional<std::string> domains;
  std::string deployment;
  std::vector<std::string> policies;
  std::vector<std::string> regimes;
  bool a_records_only = false;
  std::string out_dir;
};

void cmd_resilience(const ResilienceArgs& a, const Context& ctx) {
  const auto policies = parse_policies(a.policies.empty() ? std::vector<std::string>{"full"} : a.policies);
  RunManifest manifest("resilience");
  auto shared = load_shared(a.bits, a.surfaces, a.domains, manifest, ctx);
  manifest.input("deployment", a.deployment);
  const auto deployment = load(a.deployment, [](std::istream& s) { return load_deployment(s); });
  const auto regimes = a.regimes.empty() ? shared.bits.regimes() : parse_modes(a.regimes);
  check_store_covers(shared.bits, deployment.vps(), regimes);

  std::vector<Scenario> scenarios;
  for (const auto& p : policies) {
    for (auto r : regimes) scenarios.push_back({fmt::format("{}|{}", p.str(), to_string(r)), deployment, p, r});
  }
  manifest.flag("policies", a.policies.empty() ? std::vector<std::string>{"full"} : a.policies);
  manifest.flag("regimes", [&] {
    std::vector<std::string> names;
    for (auto r : regimes) names.emplace_back(to_string(r));
    return names;
  }());
  manifest.flag("a_records_only", a.a_records_only);

  BatchOptions options{a.a_records_only, ctx.workers};
  ctx.progress(fmt::format("resilience: {} domains x {} scenarios", shared.domains.size(), scenarios.size()));
  const auto report =
      batch_resilience(shared.domains, scenarios, shared.catalog, shared.bits, shared.bits.adversaries(), options);
  for (const auto& s : report.skipped) ctx.warn("skipped " + s.domain + ": " + s.reason);

  const auto dir = prepare_out_dir(a.out_dir);
  manifest.output(dir, "gamma.csv", [&](std::ostream& o) { write_gamma_csv(report, o); });
  manifest.output(dir, "scenarios.csv", [&](std::ostream& o) { write_scenario_manifest(report, o); });
  manifest.output(dir, "summary.csv", [&](std::ostream& o) { write_summary_csv(report, o); });
  manifest.output(dir, "cdf.csv", [&](std::ostream& o) { write_cdf_csv(report, o); });
  manifest.output(dir, "skipped.csv", [&](std::ostream& o) { write_skipped_csv(report, o); });
  manifest.output(dir, "quality.csv", [&](std::ostream& o) {
    o << "metric,value\n";
    o << fmt::format("domains_requested,{}\n", shared.domains.size());
    o << fmt::format("domains_evaluated,{}\n", report.domains.size());
    o << fmt::format("domains_skipped,{}\n", report.skipped.size());
    o << fmt::format("adversaries,{}\n", report.adversary_count);
    o << fmt::format("target_ips,{}\n", report.target_ip_count);
    o << fmt::format("unroutable_target_ips,{}\n", report.unroutable_ip_count);
    o << fmt::format("domains_with_empty_targets,{}\n", report.empty_target_domains.size());
  });
  manifest.finish(dir);
  ctx.out << fmt::format("evaluated {} domains under {} scenarios ({} skipped); results in {}\n", report.domains.size(),
                         scenarios.size(), report.skipped.size(), dir.string());
}

// ----------------------------------------------------------------- explore

struct ExploreArgs {
  std::string catalog;
  std::optional<std::string> peers;
  std::string base;
  std::string base_provider;
  std::vector<std::size_t> ks;
  std::vector<std::string> constraints;
  std::vector<std::string> policies;
  std::string regime = "none";
  std::string bits;
  std::string surfaces;
  std::optional<std::string> domains;
  bool a_records_only = false;
  std::string out_dir;
};

void cmd_explore(const ExploreArgs& a, const Context& ctx) {
  const auto policies = parse_policies(a.policies.empty() ? std::vector<std::string>{"full"} : a.policies);
  const auto regime = parse_rpki_mode(a.regime);
  if (!regime) throw UsageError("unknown regime '" + a.regime + "' (none, current, full)");
  std::vector<CloudConstraint> constraints;
  for (const auto& c : a.constraints.empty() ? std::vector<std::string>{"any"} : a.constraints) {
    try {
      constraints.push_back(parse_cloud_constraint(c));
    } catch (const InputError& e) {
      throw UsageError(e.what());
    }
  }
  const auto ks = a.ks.empty() ? std::vector<std::size_t>{1} : a.ks;

  RunManifest manifest("explore");
  manifest.input("catalog", a.catalog);
  auto catalog = load(a.catalog, [](std::istream& s) { return load_datacenter_catalog(s); });
  if (a.peers) {
    manifest.input("peers", *a.peers);
    const auto peers = load(*a.peers, [](std::istream& s) { return load_datacenter_peers(s); });
    try {
      catalog.attach_peers(peers);
    } catch (const InputError& e) {
      throw Error("input", *a.peers + ": " + e.what());
    }
  }
  manifest.input("base", a.base);
  const auto base = load(a.base, [](std::istream& s) { return load_deployment(s); });
  auto shared = load_shared(a.bits, a.surfaces, a.domains, manifest, ctx);

  std::vector<DeploymentConfig> configs;
  for (auto k : ks) {
    for (auto c : constraints) {
      auto batch = enumerate_configs(catalog, base, k, policies, c, a.base_provider, *regime);
      configs.insert(configs.end(), batch.begin(), batch.end());
    }
  }
  // Fail early on any VP the bit store cannot answer for.
  std::vector<VantagePoint> candidates(base.vps().begin(), base.vps().end());
  for (const auto& dc : catalog.entries()) candidates.push_back({dc.id, dc.host_as, dc.region, VpRole::remote});
  check_store_covers(shared.bits, candidates, std::span<const RpkiMode>(&*regime, 1));

  manifest.flag("k", ks);
  manifest.flag("constraints", a.constraints.empty() ? std::vector<std::string>{"any"} : a.constraints);
  manifest.flag("policies", a.policies.empty() ? std::vector<std::string>{"full"} : a.policies);
  manifest.flag("regime", a.regime);
  manifest.flag("base_provider", a.base_provider);
  manifest.flag("a_records_only", a.a_records_only);

  ctx.progress(fmt::format("explore: {} configurations over {} domains", configs.size(), shared.domains.size()));
  std::vector<RankedConfig> ranked;
  std::vector<SkippedDomain> skipped;
  if (shared.domains.empty()) {
    ctx.warn("no domains to evaluate; the ranking will be empty");
  } else {
    RankInputs inputs{shared.domains, &shared.catalog, &shared.bits, shared.bits.adversaries(),
                      BatchOptions{a.a_records_only, ctx.workers}};
    ranked = rank_configs(configs, catalog, inputs, &skipped);
  }
  for (const auto& s : skipped) ctx.warn("skipped " + s.domain + ": " + s.reason);

  const auto dir = prepare_out_dir(a.out_dir);
  manifest.output(dir, "ranked.csv", [&](std::ostream& o) { write_ranked_csv(ranked, o); });
  manifest.output(dir, "grid.csv", [&](std::ostream& o) { write_grid_csv(ranked, o); });
  manifest.output(dir, "overlap.csv", [&](std::ostream& o) { write_overlap_csv(provider_overlap_matrix(catalog), o); });
  manifest.output(dir, "skipped.csv", [&](std::ostream& o) {
    ResilienceReport r;
    r.skipped = skipped;
    write_skipped_csv(r, o);
  });
  manifest.finish(dir);
  ctx.out << fmt::format("ranked {} configurations; results in {}\n", ranked.size(), dir.string());
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

std::optional<long> env_int(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 0) throw UsageError(fmt::format("{}='{}' is not a non-negative integer", name, v));
  return n;
}

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> md(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!md || EVP_DigestInit_ex(md.get(), EVP_sha256(), nullptr) != 1) throw Error("io", "SHA-256 unavailable");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(md.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(md.get(), digest, &len);
  std::string hex;
  for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app{"Multi-vantage-point domain validation resilience toolkit", "mvres"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<unsigned> workers_flag;
  std::optional<int> verbosity_flag;
  app.add_option("-j,--workers", workers_flag, "Worker threads (0: all cores; env MVRES_WORKERS)");
  app.add_option("-v,--verbosity", verbosity_flag, "0 quiet, 1 warnings, 2 progress (env MVRES_VERBOSITY)")
      ->check(CLI::Range(0, 2));

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate hijacks and store the attack bit tensor");
  s->add_option("--topology", sim.topology, "AS relationships (CAIDA serial-2)")->required();
  s->add_option("--prefixes", sim.prefixes, "CSV cidr,asn")->required();
  s->add_option("--roas", sim.roas, "CSV asn,cidr,max_length");
  s->add_option("--peers", sim.peers, "CSV datacenter_id,host_asn,peer_asn");
  s->add_option("--vp-as", sim.vp_as, "Vantage-point host ASes")->delimiter(',');
  s->add_option("--deployment", sim.deployments, "Deployment CSV whose hosts become vantage points");
  s->add_option("--catalog", sim.catalogs, "Datacenter catalog whose hosts become vantage points");
  auto* adv = s->add_option("--adversaries", sim.adversaries, "Number of sampled adversary ASes");
  s->add_flag("--all-adversaries", sim.all_adversaries, "Use every AS as an adversary")->excludes(adv);
  s->add_option("--seed", sim.seed, "Adversary sampling seed");
  s->add_option("--modes", sim.modes, "Regimes: none,current,full")->delimiter(',');
  s->add_option("--out", sim.out_dir, "Output directory")->required();
  s->add_flag("--csv", sim.csv, "Also write attack_bits.csv");

  ResolveArgs res;
  auto* r = app.add_subcommand("resolve-surface", "Compute DNS attack surfaces per domain and region");
  r->add_option("--domains", res.domains, "One FQDN per line")->required();
  r->add_option("--fixture", res.fixture, "JSON zone fixture");
  r->add_flag("--live", res.live, "Query Internet nameservers");
  r->add_flag("--allow-network", res.allow_network, "Permit network access for --live");
  r->add_option("--regions", res.regions, "Measurement regions")->delimiter(',');
  r->add_option("--repeats", res.repeats, "Lookups per name");
  r->add_flag("--no-dnssec", res.no_dnssec, "Ignore DS records");
  r->add_option("--out", res.out_dir, "Output directory")->required();

  ResilienceArgs rsl;
  auto* l = app.add_subcommand("resilience", "Compute per-domain resilience");
  l->add_option("--bits", rsl.bits, "attack_bits.bin from simulate")->required();
  l->add_option("--surfaces", rsl.surfaces, "surfaces.jsonl from resolve-surface")->required();
  l->add_option("--domains", rsl.domains, "Restrict to these domains");
  l->add_option("--deployment", rsl.deployment, "CSV vp_id,host_asn,region,role")->required();
  l->add_option("--policy", rsl.policies, "Quorum policies: full, f=N, with optional +any")->delimiter(',');
  l->add_option("--regime", rsl.regimes, "Regimes (default: all simulated)")->delimiter(',');
  l->add_flag("--a-records-only", rsl.a_records_only, "Use only A/AAAA records as targets");
  l->add_option("--out", rsl.out_dir, "Output directory")->required();

  ExploreArgs exp;
  auto* e = app.add_subcommand("explore", "Rank VP additions from a datacenter catalog");
  e->add_option("--catalog", exp.catalog, "CSV datacenter_id,provider,location,host_asn,region")->required();
  e->add_option("--peers", exp.peers, "CSV datacenter_id,host_asn,peer_asn");
  e->add_option("--base", exp.base, "Base deployment CSV")->required();
  e->add_option("--base-provider", exp.base_provider, "Provider of the base deployment");
  e->add_option("--k", exp.ks, "Numbers of datacenters to add")->delimiter(',');
  e->add_option("--constraint", exp.constraints, "single_cloud, multi_cloud, any")->delimiter(',');
  e->add_option("--policy", exp.policies, "Quorum policies")->delimiter(',');
  e->add_option("--regime", exp.regime, "Regime");
  e->add_option("--bits", exp.bits, "attack_bits.bin from simulate")->required();
  e->add_option("--surfaces", exp.surfaces, "surfaces.jsonl from resolve-surface")->required();
  e->add_option("--domains", exp.domains, "Restrict to these domains");
  e->add_flag("--a-records-only", exp.a_records_only, "Use only A/AAAA records as targets");
  e->add_option("--out", exp.out_dir, "Output directory")->required();

  try {
    try {
      std::vector<std::string> args;
      for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
      app.parse(std::move(args));
    } catch (const CLI::ParseError& pe) {
      if (pe.get_exit_code() == 0) return app.exit(pe, out, err);
      throw UsageError(pe.what());
    }

    ctx.workers = static_cast<unsigned>(env_int("MVRES_WORKERS").value_or(0));
    ctx.verbosity = static_cast<int>(env_int("MVRES_VERBOSITY").value_or(1));
    if (ctx.verbosity > 2) throw UsageError("MVRES_VERBOSITY must be 0, 1 or 2");
    if (workers_flag) ctx.workers = *workers_flag;
    if (verbosity_flag) ctx.verbosity = *verbosity_flag;

    if (s->parsed()) cmd_simulate(sim, ctx);
    if (r->parsed()) cmd_resolve_surface(res, ctx);
    if (l->parsed()) cmd_resilience(rsl, ctx);
    if (e->parsed()) cmd_explore(exp, ctx);
    return 0;
  } catch (const UsageError& ue) {
    err << "mvres: error: usage: " << one_line(ue.what()) << '\n';
    return 2;
  } catch (const Error& ex) {
    err << "mvres: error: " << ex.kind() << ": " << one_line(ex.what()) << '\n';
    return 1;
  } catch (const std::exception& ex) {
    err << "mvres: error: internal: " << one_line(ex.what()) << '\n';
    return 1;
  }
}

}  // namespace mvres::cli
