#include <random>
#include <sstream>

#include "doctest.h"
#include "mvres/explorer.hpp"
#include "support/resilience_oracle.hpp"
#include "support/synthetic.hpp"

using namespace mvres;

namespace {

DatacenterCatalog five_datacenters() {
  std::istringstream csv(
      "datacenter_id,provider,location,host_asn,region\n"
      "aws-1,aws,Ohio,16509,us-east-2\n"
      "aws-2,aws,Oregon,16509,us-west-2\n"
      "aws-3,aws,Paris,16509,eu-west-3\n"
      "gcp-1,gcp,Iowa,15169,us-east-2\n"
      "az-1,azure,Virginia,8075,us-east-2\n");
  return load_datacenter_catalog(csv);
}

Deployment base_at(const std::string& id, Asn asn, const std::string& region) {
  return Deployment({{id, asn, region, VpRole::primary}});
}

std::size_t choose(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("datacenter catalog") {
  const auto catalog = five_datacenters();
  CHECK(catalog.entries().size() == 5);
  CHECK(catalog.entries().front().id == "aws-1");
  REQUIRE(catalog.find("gcp-1"));
  CHECK(catalog.find("gcp-1")->host_as == 15169);
  CHECK_FALSE(catalog.find("nope"));

  std::istringstream dup("a,aws,x,1,r\na,gcp,y,2,r\n");
  CHECK_THROWS_AS(load_datacenter_catalog(dup), IngestError);
  std::istringstream bad_provider("a,oracle,x,1,r\n");
  CHECK_THROWS_WITH_AS(load_datacenter_catalog(bad_provider), doctest::Contains("line 1"), IngestError);
  std::istringstream bad_asn("a,aws,x,1,r\nb,aws,x,q,r\n");
  CHECK_THROWS_WITH_AS(load_datacenter_catalog(bad_asn), doctest::Contains("line 2"), IngestError);

  auto with_peers = five_datacenters();
  const DatacenterPeerSet sets[] = {{"aws-1", 16509, {1, 2, 3}}};
  with_peers.attach_peers(sets);
  CHECK(with_peers.find("aws-1")->peers == std::vector<Asn>{1, 2, 3});
  const DatacenterPeerSet wrong_host[] = {{"aws-1", 1, {2}}};
  CHECK_THROWS_AS(with_peers.attach_peers(wrong_host), InputError);
  const DatacenterPeerSet unknown[] = {{"zz", 1, {2}}};
  CHECK_THROWS_AS(with_peers.attach_peers(unknown), InputError);
}

TEST_CASE("configuration enumeration") {
  const auto catalog = five_datacenters();
  const QuorumPolicy one[] = {QuorumPolicy::full()};
  const QuorumPolicy two[] = {QuorumPolicy::full(), QuorumPolicy::allow_remote_failures(1)};
  const auto outside = base_at("le-primary", 10, "us-east-2");

  CHECK(enumerate_configs(catalog, outside, 0, one, CloudConstraint::any, "", RpkiMode::none).size() == 1);
  CHECK(enumerate_configs(catalog, outside, 0, two, CloudConstraint::any, "", RpkiMode::none).size() == 2);
  CHECK(enumerate_configs(catalog, outside, 2, one, CloudConstraint::any, "", RpkiMode::none).size() == 10);
  CHECK(enumerate_configs(catalog, outside, 2, one, CloudConstraint::single_cloud, "aws", RpkiMode::none).size() == 3);
  CHECK(enumerate_configs(catalog, outside, 1, two, CloudConstraint::any, "", RpkiMode::none).size() == 10);

  // The base's own datacenter is never added again.
  const auto inside = base_at("aws-1", 16509, "us-east-2");
  const auto from_inside = enumerate_configs(catalog, inside, 1, one, CloudConstraint::single_cloud, "aws",
                                             RpkiMode::none);
  REQUIRE(from_inside.size() == 2);
  CHECK(from_inside[0].additions == std::vector<std::string>{"aws-2"});
  CHECK(from_inside[1].additions == std::vector<std::string>{"aws-3"});

  for (std::size_t k = 0; k <= 5; ++k) {
    for (auto c : {CloudConstraint::any, CloudConstraint::multi_cloud, CloudConstraint::single_cloud}) {
      const std::size_t pool = c == CloudConstraint::single_cloud ? 3 : 5;
      if (k > pool) {
        CHECK_THROWS_AS(enumerate_configs(catalog, outside, k, two, c, "aws", RpkiMode::none), InputError);
        continue;
      }
      const auto configs = enumerate_configs(catalog, outside, k, two, c, "aws", RpkiMode::none);
      CHECK(configs.size() == 2 * choose(pool, k));
      std::set<std::string> ids;
      for (const auto& cfg : configs) {
        ids.insert(cfg.id());
        CHECK(cfg.additions.size() == k);
        CHECK(std::is_sorted(cfg.additions.begin(), cfg.additions.end()));
        if (c == CloudConstraint::single_cloud) {
          for (const auto& a : cfg.additions) CHECK(catalog.find(a)->provider == "aws");
        }
      }
      CHECK(ids.size() == configs.size());
    }
  }
  CHECK_THROWS_AS(enumerate_configs(catalog, outside, 1, one, CloudConstraint::single_cloud, "", RpkiMode::none),
                  InputError);

  const auto configs = enumerate_configs(catalog, outside, 2, one, CloudConstraint::any, "", RpkiMode::full);
  CHECK(configs.front().id() == "full|full|any|aws-1+aws-2");
  const auto d = configs.front().deployment(catalog);
  CHECK(d.size() == 3);
  CHECK(d.vps()[1].id == "aws-1");
  CHECK(d.vps()[2].region == "us-west-2");
  CHECK(enumerate_configs(catalog, outside, 0, one, CloudConstraint::any, "", RpkiMode::none)[0].id() ==
        "full|none|any|base");

  CHECK(parse_cloud_constraint("single_cloud") == CloudConstraint::single_cloud);
  CHECK_THROWS_AS(parse_cloud_constraint("hybrid"), InputError);
}

TEST_CASE("peer overlap") {
  const Asn a[] = {1, 2, 3, 4};
  const Asn b[] = {3, 4, 5};
  const Asn c[] = {7, 8};
  CHECK(peer_overlap(a, b) == 0.5);
  CHECK(peer_overlap(b, a) == 0.5);
  CHECK(peer_overlap(a, a) == 1.0);
  CHECK(peer_overlap(a, c) == 0.0);
  const Asn sub[] = {1, 2};
  CHECK(peer_overlap(a, sub) == 0.5);
  CHECK_THROWS_AS(peer_overlap(a, std::vector<Asn>{}), InputError);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<Asn> x, y;
    for (int j = 0; j < 1 + static_cast<int>(rng() % 8); ++j) x.push_back(static_cast<Asn>(rng() % 12));
    for (int j = 0; j < 1 + static_cast<int>(rng() % 8); ++j) y.push_back(static_cast<Asn>(rng() % 12));
    const double o = peer_overlap(x, y);
    CHECK(o == peer_overlap(y, x));
    CHECK(o >= 0.0);
    CHECK(o <= 1.0);
    const std::set<Asn> sx(x.begin(), x.end()), sy(y.begin(), y.end());
    CHECK((o == 1.0) == (sx == sy));
    std::vector<Asn> common;
    std::set_intersection(sx.begin(), sx.end(), sy.begin(), sy.end(), std::back_inserter(common));
    CHECK((o == 0.0) == common.empty());
  }
}

TEST_CASE("provider overlap matrix") {
  std::vector<Datacenter> dcs = {
      {"aws-1", "aws", "a", 16509, "r", {1, 2, 3, 4}}, {"aws-2", "aws", "b", 16509, "r", {1, 2, 3, 4}},
      {"gcp-1", "gcp", "c", 15169, "r", {3, 4, 5}},    {"az-1", "azure", "d", 8075, "r", {9}},
      {"az-2", "azure", "e", 8075, "r", {9, 10}},      {"other-1", "other", "f", 1, "r", {}},
  };
  const DatacenterCatalog catalog(dcs);
  const auto m = provider_overlap_matrix(catalog);
  CHECK(m.at({"aws", "aws"}) == 1.0);
  CHECK_FALSE(m.contains({"gcp", "gcp"}));
  CHECK(m.at({"aws", "gcp"}) == 0.5);
  CHECK(m.at({"azure", "azure"}) == 0.5);
  CHECK(m.at({"aws", "azure"}) == 0.0);
  for (const auto& [key, v] : m) {
    CHECK(key.first <= key.second);
    CHECK(key.first != "other");
  }
  std::ostringstream csv;
  write_overlap_csv(m, csv);
  const auto text = csv.str();
  CHECK(text.find("aws,gcp,0.5\n") != std::string::npos);
  CHECK(text.find("gcp,aws,0.5\n") != std::string::npos);
  CHECK(text.find("gcp,gcp") == std::string::npos);

  // Three providers: symmetric 3x3 shape, every off-diagonal present.
  std::set<std::string> providers;
  for (const auto& [key, v] : m) {
    providers.insert(key.first);
    providers.insert(key.second);
  }
  for (const auto& p : providers) {
    for (const auto& q : providers) {
      if (p != q) CHECK(m.contains(std::minmax(p, q)));
    }
  }
}

TEST_CASE("ranking configurations") {
  std::mt19937_64 rng(0x7ab1e4);
  for (int instance = 0; instance < 10; ++instance) {
    auto inst = testing::random_pipeline(rng, 10, 5);
    const auto nodes = inst.graph.nodes();
    std::vector<Datacenter> dcs;
    const char* providers[] = {"aws", "gcp", "azure"};
    for (std::size_t i = 0; i < 4; ++i) {
      dcs.push_back({"dc" + std::to_string(i), providers[i % 3], "loc", nodes[testing::pick(rng, nodes.size())],
                     inst.regions[i % 2], {}});
    }
    const DatacenterCatalog catalog(dcs);
    const auto base = base_at("primary", nodes[0], inst.regions[0]);
    std::vector<VantagePoint> all = {base.primary()};
    for (const auto& dc : dcs) all.push_back({dc.id, dc.host_as, dc.region, VpRole::remote});
    inst.deployments = {Deployment(all)};
    const auto bits = testing::simulate_instance(inst);
    const auto surfaces = testing::instance_catalog(inst);
    const auto domains = testing::instance_domains(inst);
    const std::vector<Asn> adversaries(nodes.begin(), nodes.end());
    RankInputs inputs{domains, &surfaces, &bits, adversaries, {}};

    const QuorumPolicy full[] = {QuorumPolicy::full()};
    auto k0 = enumerate_configs(catalog, base, 0, full, CloudConstraint::any, "", RpkiMode::none);
    const auto single = rank_configs(std::span(k0).first(1), catalog, inputs);
    CHECK(single.size() == 1);

    // Under full quorum every one-VP extension ranks at or above the base.
    auto k1 = enumerate_configs(catalog, base, 1, full, CloudConstraint::any, "", RpkiMode::none);
    CHECK(k1.size() == 4);
    std::vector<DeploymentConfig> both = k0;
    both.insert(both.end(), k1.begin(), k1.end());
    const auto ranked = rank_configs(both, catalog, inputs);
    REQUIRE(ranked.size() == 5);
    const auto base_pos = std::find_if(ranked.begin(), ranked.end(),
                                       [](const RankedConfig& r) { return r.config.additions.empty(); });
    for (const auto& r : ranked) {
      if (!r.config.additions.empty()) CHECK(r.median >= base_pos->median);
    }
    for (std::size_t i = 1; i < ranked.size(); ++i) {
      const auto& a = ranked[i - 1];
      const auto& b = ranked[i];
      CHECK((a.median > b.median || (a.median == b.median && a.mean >= b.mean)));
      if (a.median == b.median && a.mean == b.mean) {
        CHECK((a.config.additions.size() < b.config.additions.size() ||
               (a.config.additions.size() == b.config.additions.size() && a.id < b.id)));
      }
    }
    CHECK(rank_configs(both, catalog, inputs).size() == ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(rank_configs(both, catalog, inputs)[i].id == ranked[i].id);

    // Per-domain dominance: full quorum over the same VPs dominates f=1.
    const QuorumPolicy pair[] = {QuorumPolicy::allow_remote_failures(1), QuorumPolicy::full()};
    const auto k2 = enumerate_configs(catalog, base, 2, pair, CloudConstraint::any, "", RpkiMode::none);
    const std::vector<DeploymentConfig> duel = {k2.front(), k2[k2.size() / 2]};
    REQUIRE(duel[1].policy == QuorumPolicy::full());
    REQUIRE(duel[0].additions == duel[1].additions);
    const auto duel_ranked = rank_configs(duel, catalog, inputs);
    CHECK(duel_ranked.front().median >= duel_ranked.back().median);
    if (duel_ranked.front().median != duel_ranked.back().median) {
      CHECK(duel_ranked.front().config.policy == QuorumPolicy::full());
    }

    std::ostringstream table, grid;
    write_ranked_csv(ranked, table);
    write_grid_csv(ranked, grid);
    CHECK(table.str().rfind("rank,config_id,additions,quorum,constraint,regime,median_gamma,mean_gamma\n", 0) == 0);
    const auto grid_text = grid.str();
    CHECK(std::count(grid_text.begin(), grid_text.end(), '\n') == 3);
    CHECK(grid_text.rfind("additions,quorum,constraint,median_gamma\n0,full,any,", 0) == 0);
  }
}
