#include <algorithm>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mvres/dns_surface.hpp"
#include "mvres/zone_fixture.hpp"

using namespace mvres;

namespace {

FixtureZoneOracle load_fixture(const std::string& name) {
  std::ifstream in(std::string(MVRES_FIXTURE_DIR) + "/dns/" + name);
  REQUIRE(in);
  return FixtureZoneOracle::parse(in);
}

std::set<IpAddress> ips(std::initializer_list<const char*> text) {
  std::set<IpAddress> out;
  for (const char* t : text) out.insert(*IpAddress::parse(t));
  return out;
}

bool subset(const std::set<IpAddress>& a, const std::set<IpAddress>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Counts calls to detect memo or repeat behaviour.
class CountingOracle : public ZoneOracle {
 public:
  explicit CountingOracle(ZoneOracle& inner) : inner_(inner) {}
  std::optional<Delegation> delegation(const std::string& zone, const std::string& region) override {
    CHECK(zone != ".");
    return inner_.delegation(zone, region);
  }
  std::optional<AddressAnswer> address_records(const std::string& name, const std::string& region,
                                               int attempt) override {
    ++calls;
    return inner_.address_records(name, region, attempt);
  }
  int calls = 0;

 private:
  ZoneOracle& inner_;
};

}  // namespace

TEST_CASE("name normalization") {
  CHECK(normalize_name("WWW.Example.COM.") == "www.example.com");
  CHECK(normalize_name(".") == ".");
  CHECK_THROWS_AS(normalize_name(""), InputError);
  CHECK_THROWS_AS(normalize_name("a..b"), InputError);
  CHECK_THROWS_AS(normalize_name("bad name.com"), InputError);
  CHECK_THROWS_AS(normalize_name(std::string(64, 'a') + ".com"), InputError);
}

TEST_CASE("worked example: glueless nameservers in an unsigned zone") {
  auto oracle = load_fixture("example_com.json");
  const auto s = resolve_attack_surface(oracle, "example.com", "us-east-2");
  CHECK(s.domain == "example.com");
  CHECK(s.region == "us-east-2");
  CHECK(s.a_record_ips == ips({"192.0.2.10", "2001:db8::10"}));
  CHECK(s.nameserver_ips == ips({"203.0.113.1", "203.0.113.2"}));
  CHECK(s.target_ips == ips({"192.0.2.10", "2001:db8::10", "203.0.113.1", "203.0.113.2"}));
  CHECK(s.glueless_names == std::set<std::string>{"ns1.provider.net", "ns2.provider.net"});
  CHECK(s.dnssec_cut_zones == std::set<std::string>{"com", "net"});
  CHECK_FALSE(s.target_ips.contains(*IpAddress::parse("192.5.6.30")));
}

TEST_CASE("DNSSEC cuts remove zones from the surface") {
  auto oracle = load_fixture("example_com.json");
  SurfaceOptions unsigned_view;
  unsigned_view.honor_dnssec = false;
  const auto with = resolve_attack_surface(oracle, "example.com", "us-east-2");
  const auto without = resolve_attack_surface(oracle, "example.com", "us-east-2", unsigned_view);
  CHECK(subset(with.target_ips, without.target_ips));
  CHECK(without.target_ips.contains(*IpAddress::parse("192.5.6.30")));
  CHECK(without.dnssec_cut_zones.empty());

  auto signed_oracle = load_fixture("signed.json");
  const auto s = resolve_attack_surface(signed_oracle, "www.signed.org", "us-east-2");
  CHECK(s.nameserver_ips.empty());
  CHECK(s.target_ips == s.a_record_ips);
  CHECK(s.a_record_ips == ips({"198.51.100.80"}));
  CHECK(s.dnssec_cut_zones == std::set<std::string>{"org", "signed.org"});

  const auto s_open = resolve_attack_surface(signed_oracle, "www.signed.org", "us-east-2", unsigned_view);
  CHECK(s_open.target_ips == ips({"198.51.100.80", "199.19.56.1", "198.51.100.53"}));
  CHECK(s_open.glueless_names == std::set<std::string>{"ns.dnshost.org"});
}

TEST_CASE("repeated lookups union rotating answers") {
  auto oracle = load_fixture("rotating.json");
  SurfaceOptions one;
  one.repeats = 1;
  CHECK(resolve_attack_surface(oracle, "www.cdn.test", "us-east-2", one).a_record_ips == ips({"192.0.2.1"}));
  const auto ten = resolve_attack_surface(oracle, "www.cdn.test", "us-east-2");
  CHECK(ten.a_record_ips == ips({"192.0.2.1", "192.0.2.2", "192.0.2.3"}));
  CHECK(ten.nameserver_ips == ips({"192.0.2.53"}));

  std::set<IpAddress> previous;
  for (int k = 1; k <= 5; ++k) {
    SurfaceOptions o;
    o.repeats = k;
    const auto s = resolve_attack_surface(oracle, "www.cdn.test", "us-east-2", o);
    CHECK(subset(previous, s.target_ips));
    previous = s.target_ips;
  }

  CountingOracle counting(oracle);
  resolve_attack_surface(counting, "www.cdn.test", "us-east-2");
  CHECK(counting.calls == 10);

  SurfaceOptions zero;
  zero.repeats = 0;
  CHECK_THROWS_AS(resolve_attack_surface(oracle, "www.cdn.test", "us-east-2", zero), InputError);
}

TEST_CASE("region overrides") {
  auto oracle = load_fixture("rotating.json");
  const auto eu = resolve_attack_surface(oracle, "www.cdn.test", "eu-west-3");
  CHECK(eu.a_record_ips == ips({"192.0.2.9"}));
  CHECK(eu.region == "eu-west-3");
}

TEST_CASE("resolution errors") {
  auto oracle = load_fixture("rotating.json");
  SUBCASE("self-hosted glueless nameserver is a cycle") {
    try {
      resolve_attack_surface(oracle, "loop.test", "us-east-2");
      FAIL("expected a resolution error");
    } catch (const ResolutionError& e) {
      CHECK(std::string(e.what()).find("cycle") != std::string::npos);
      CHECK(std::string(e.what()).find("ns.loop.test") != std::string::npos);
      CHECK(e.partial().a_record_ips.empty());
      CHECK(std::string(e.kind()) == "resolution");
    }
    CHECK_THROWS_AS(nameserver_surface(oracle, "ns.loop.test", std::nullopt, "us-east-2"), ResolutionError);
  }
  SUBCASE("unknown name") {
    CHECK_THROWS_AS(resolve_attack_surface(oracle, "missing.test", "us-east-2"), ResolutionError);
  }
  SUBCASE("glueless depth cap") {
    CHECK(resolve_attack_surface(oracle, "deep.test", "us-east-2").target_ips ==
          ips({"192.0.2.70", "192.0.2.71", "192.0.2.72", "192.0.2.73", "192.0.2.53"}));
    SurfaceOptions shallow;
    shallow.max_depth = 3;
    CHECK_THROWS_WITH_AS(resolve_attack_surface(oracle, "deep.test", "us-east-2", shallow),
                         doctest::Contains("deeper than 3"), ResolutionError);
  }
  SUBCASE("CNAME loops and chain caps") {
    auto looped = FixtureZoneOracle::parse(
        R"({"names": {"a.test": {"cname": "b.test"}, "b.test": {"cname": "a.test"}}})");
    CHECK_THROWS_AS(resolve_attack_surface(looped, "a.test", "us-east-2"), ResolutionError);
    std::string doc = R"({"names": {)";
    for (int i = 0; i < 10; ++i) doc += "\"c" + std::to_string(i) + ".test\": {\"cname\": \"c" + std::to_string(i + 1) + ".test\"},";
    doc += R"("c10.test": {"a": ["192.0.2.1"]}}})";
    auto long_chain = FixtureZoneOracle::parse(doc);
    CHECK_THROWS_AS(resolve_attack_surface(long_chain, "c0.test", "us-east-2"), ResolutionError);
    CHECK(resolve_attack_surface(long_chain, "c2.test", "us-east-2").a_record_ips == ips({"192.0.2.1"}));
  }
}

TEST_CASE("nameserver surface") {
  auto oracle = load_fixture("signed.json");
  CHECK(nameserver_surface(oracle, "ns.anything.example", std::vector{*IpAddress::parse("192.0.2.53")},
                           "us-east-2") == ips({"192.0.2.53"}));
  CHECK(nameserver_surface(oracle, "ns.dnshost.org", std::nullopt, "us-east-2") == ips({"198.51.100.53"}));

  // Glue equal to the authoritative A records: glued result is contained in
  // the glueless one.
  auto example = load_fixture("example_com.json");
  const auto glued = nameserver_surface(example, "ns1.provider.net", std::vector{*IpAddress::parse("203.0.113.1")},
                                        "us-east-2");
  const auto glueless = nameserver_surface(example, "ns1.provider.net", std::nullopt, "us-east-2");
  CHECK(subset(glued, glueless));
  CHECK(glueless == ips({"203.0.113.1", "203.0.113.2"}));
}

TEST_CASE("surface properties over every fixture name") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"example_com.json", {"example.com", "ns1.provider.net", "a.gtld-servers.net"}},
      {"signed.json", {"www.signed.org", "signed.org", "ns.dnshost.org"}},
      {"rotating.json", {"www.cdn.test", "deep.test", "ns.d2.test"}},
  };
  SurfaceOptions open;
  open.honor_dnssec = false;
  for (const auto& [file, names] : cases) {
    auto oracle = load_fixture(file);
    for (const auto& name : names) {
      for (auto region : kMeasurementRegions) {
        const auto s = resolve_attack_surface(oracle, name, std::string(region));
        const auto again = resolve_attack_surface(oracle, name, std::string(region));
        CHECK(s == again);
        const auto q = resolve_attack_surface(oracle, name, std::string(region), open);
        CHECK(subset(s.target_ips, q.target_ips));
        auto expected = s.a_record_ips;
        expected.insert(s.nameserver_ips.begin(), s.nameserver_ips.end());
        CHECK(s.target_ips == expected);
      }
    }
  }
}

TEST_CASE("union across regions") {
  AttackSurface a{"d.test", "r1", {}, ips({"192.0.2.1", "192.0.2.2"}), ips({"192.0.2.3"}), {"test"}, {}};
  a.target_ips = ips({"192.0.2.1", "192.0.2.2", "192.0.2.3"});
  AttackSurface b{"d.test", "r2", {}, ips({"192.0.2.4", "192.0.2.5"}), ips({"192.0.2.6", "192.0.2.7"}), {}, {"ns.x"}};
  b.target_ips = ips({"192.0.2.4", "192.0.2.5", "192.0.2.6", "192.0.2.7"});

  CHECK(surface_union_across_regions(std::vector{a}) == a);
  const auto u = surface_union_across_regions(std::vector{a, b});
  CHECK(u.target_ips.size() == 7);
  CHECK(u.region == "all");
  CHECK(u.glueless_names == std::set<std::string>{"ns.x"});
  CHECK(surface_union_across_regions(std::vector{a, a}).target_ips == a.target_ips);

  auto other = b;
  other.domain = "e.test";
  CHECK_THROWS_AS(surface_union_across_regions(std::vector{a, other}), InputError);
  CHECK_THROWS_AS(surface_union_across_regions(std::vector<AttackSurface>{}), InputError);
}

TEST_CASE("surface log round trip") {
  auto oracle = load_fixture("example_com.json");
  SurfaceRecord ok{resolve_attack_surface(oracle, "example.com", "us-east-2"), std::nullopt};
  SurfaceRecord failed;
  failed.surface.domain = "broken.test";
  failed.surface.region = "us-west-2";
  failed.error = "zone broken.test has no reachable nameserver";

  std::stringstream log;
  write_surface_record(ok, log);
  write_surface_record(failed, log);
  const auto text = log.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  const auto back = read_surface_log(log);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == ok);
  CHECK(back[1] == failed);

  std::istringstream bad("{\"domain\": \"x.test\", \"region\": \"r\"}\nnot json\n");
  CHECK_THROWS_WITH_AS(read_surface_log(bad), doctest::Contains("line 2"), IngestError);
}

TEST_CASE("fixture parsing errors") {
  CHECK_THROWS_AS(FixtureZoneOracle::parse("[1, 2]"), InputError);
  CHECK_THROWS_AS(FixtureZoneOracle::parse("{\"names\": {\"a.test\": {\"a\": [\"999.1.1.1\"]}}}"), InputError);
  CHECK_THROWS_AS(FixtureZoneOracle::parse("{"), InputError);
}
