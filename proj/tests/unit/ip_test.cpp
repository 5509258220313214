#include <random>

#include "doctest.h"
#include "mvres/ip.hpp"

using namespace mvres;

TEST_CASE("prefix parsing canonicalizes host bits") {
  auto p = Prefix::parse("10.0.0.1/16");
  REQUIRE(p);
  CHECK(p->str() == "10.0.0.0/16");
  CHECK(Prefix::parse("2001:db8::1/32")->str() == "2001:db8::/32");
  CHECK(Prefix::parse("192.0.2.7")->length() == 32);
  CHECK_FALSE(Prefix::parse("10.0.0.0/33"));
  CHECK_FALSE(Prefix::parse("10.0.0/8"));
  CHECK_FALSE(Prefix::parse("10.0.0.0/"));
  CHECK_FALSE(Prefix::parse("nonsense"));
}

TEST_CASE("prefix containment respects family and length") {
  const auto p = *Prefix::parse("10.0.0.0/16");
  CHECK(p.contains(*IpAddress::parse("10.0.255.1")));
  CHECK_FALSE(p.contains(*IpAddress::parse("10.1.0.1")));
  CHECK_FALSE(p.contains(*IpAddress::parse("::a00:1")));
  CHECK(p.covers(*Prefix::parse("10.0.4.0/24")));
  CHECK_FALSE(Prefix::parse("10.0.4.0/24")->covers(p));
  CHECK(Prefix::parse("0.0.0.0/0")->contains(*IpAddress::parse("8.8.8.8")));
}

TEST_CASE("trie reports covering prefixes shortest first") {
  PrefixTrie trie;
  trie.insert(*Prefix::parse("10.0.0.0/8"), 1);
  trie.insert(*Prefix::parse("10.1.0.0/16"), 2);
  trie.insert(*Prefix::parse("2001:db8::/32"), 3);
  std::vector<std::uint32_t> seen;
  trie.for_each_covering(*IpAddress::parse("10.1.2.3"), 32, [&](int, std::uint32_t v) { seen.push_back(v); });
  CHECK(seen == std::vector<std::uint32_t>{1, 2});
  CHECK(trie.longest_match(*IpAddress::parse("2001:db8::1")) == 3U);
  CHECK_FALSE(trie.longest_match(*IpAddress::parse("11.0.0.1")));
}
