#include <doctest.h>

#include "mvres/error.hpp"
#include "mvres/live_dns.hpp"

using namespace mvres;

namespace {

struct Wire {
  std::vector<std::uint8_t> bytes;
  Wire& u8(std::uint8_t v) {
    bytes.push_back(v);
    return *this;
  }
  Wire& u16(std::uint16_t v) { return u8(static_cast<std::uint8_t>(v >> 8)).u8(static_cast<std::uint8_t>(v)); }
  Wire& u32(std::uint32_t v) { return u16(static_cast<std::uint16_t>(v >> 16)).u16(static_cast<std::uint16_t>(v)); }
  Wire& label(const std::string& l) {
    u8(static_cast<std::uint8_t>(l.size()));
    bytes.insert(bytes.end(), l.begin(), l.end());
    return *this;
  }
  Wire& pointer(std::size_t offset) { return u16(static_cast<std::uint16_t>(0xC000 | offset)); }
  std::size_t size() const { return bytes.size(); }
};

}  // namespace

TEST_CASE("dns query encoding") {
  const auto q = dns::encode_query(0x1234, "example.com", dns::A);
  const std::vector<std::uint8_t> expected{
      0x12, 0x34, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x01,  // header, one OPT
      7,    'e',  'x',  'a',  'm',  'p',  'l',  'e',  3,    'c',  'o',  'm',  0,
      0x00, 0x01, 0x00, 0x01,                                                   // A, IN
      0x00, 0x00, 0x29, 0x04, 0xd0, 0x00, 0x00, 0x80, 0x00, 0x00, 0x00};        // OPT, 1232, DO
  CHECK(q == expected);
  CHECK(dns::encode_query(1, ".", dns::NS)[12] == 0);
  CHECK_THROWS_AS(dns::encode_query(1, "a..b", dns::A), InputError);
  CHECK_THROWS_AS(dns::encode_query(1, std::string(64, 'a') + ".com", dns::A), InputError);

  const auto back = dns::decode_message(q);
  CHECK(back.id == 0x1234);
  CHECK_FALSE(back.response);
  REQUIRE(back.additional.size() == 1);
  CHECK(back.additional[0].type == dns::OPT);
  CHECK(back.additional[0].name == ".");
}

TEST_CASE("dns referral decoding with compression") {
  Wire w;
  w.u16(0xBEEF).u16(0x8000).u16(1).u16(0).u16(2).u16(2);
  const auto qname = w.size();
  w.label("Example").label("com").u8(0).u16(dns::A).u16(1);
  // NS example.com -> ns1.example.com, target compressed against the question.
  w.pointer(qname).u16(dns::NS).u16(1).u32(172800).u16(6);
  const auto ns1 = w.size();
  w.label("ns1").pointer(qname);
  // DS example.com
  w.pointer(qname).u16(dns::DS).u16(1).u32(86400).u16(4).u32(0xDEADBEEF);
  // Glue for ns1.example.com, owner name a pointer into record data.
  w.pointer(ns1).u16(dns::A).u16(1).u32(172800).u16(4).u8(192).u8(0).u8(2).u8(53);
  w.pointer(ns1).u16(dns::AAAA).u16(1).u32(172800).u16(16);
  for (int i = 0; i < 15; ++i) w.u8(i == 0 ? 0x20 : 0);
  w.u8(1);

  const auto m = dns::decode_message(w.bytes);
  CHECK(m.id == 0xBEEF);
  CHECK(m.response);
  CHECK_FALSE(m.authoritative);
  CHECK_FALSE(m.truncated);
  REQUIRE(m.authority.size() == 2);
  CHECK(m.authority[0].name == "example.com");
  CHECK(m.authority[0].type == dns::NS);
  CHECK(m.authority[0].target == "ns1.example.com");
  CHECK(m.authority[0].ttl == 172800);
  CHECK(m.authority[1].type == dns::DS);
  REQUIRE(m.additional.size() == 2);
  CHECK(m.additional[0].name == "ns1.example.com");
  CHECK(m.additional[0].address == IpAddress::parse("192.0.2.53"));
  CHECK(m.additional[1].address == IpAddress::parse("2000::1"));
}

TEST_CASE("dns flags and answers") {
  Wire w;
  w.u16(7).u16(0x8403 | 0x0200).u16(0).u16(2).u16(0).u16(0);
  const auto owner = w.size();
  w.label("www").label("test").u8(0).u16(dns::CNAME).u16(1).u32(60).u16(6);
  w.label("web").pointer(owner + 4);
  w.label("web").pointer(owner + 4).u16(dns::A).u16(1).u32(60).u16(4).u32(0xC6336450);
  const auto m = dns::decode_message(w.bytes);
  CHECK(m.authoritative);
  CHECK(m.truncated);
  CHECK(m.rcode == 3);
  REQUIRE(m.answers.size() == 2);
  CHECK(m.answers[0].target == "web.test");
  CHECK(m.answers[1].name == "web.test");
  CHECK(m.answers[1].address == IpAddress::parse("198.51.100.80"));
}

TEST_CASE("malformed dns messages") {
  const auto expect_dns_error = [](const std::vector<std::uint8_t>& bytes) {
    try {
      dns::decode_message(bytes);
      FAIL("accepted a malformed message");
    } catch (const Error& e) {
      CHECK(e.kind() == "dns");
    }
  };
  expect_dns_error({0x00, 0x01, 0x80});
  {
    Wire loop;
    loop.u16(1).u16(0x8000).u16(1).u16(0).u16(0).u16(0).pointer(12).u16(1).u16(1);
    expect_dns_error(loop.bytes);
  }
  {
    Wire short_rdata;
    short_rdata.u16(1).u16(0x8000).u16(0).u16(1).u16(0).u16(0).u8(0).u16(dns::A).u16(1).u32(0).u16(4).u8(1);
    expect_dns_error(short_rdata.bytes);
  }
  {
    Wire bad_length;
    bad_length.u16(1).u16(0x8000).u16(0).u16(1).u16(0).u16(0).u8(0).u16(dns::A).u16(1).u32(0).u16(3).u8(1).u8(2).u8(
        3);
    expect_dns_error(bad_length.bytes);
  }
  {
    Wire past_end;
    past_end.u16(1).u16(0x8000).u16(1).u16(0).u16(0).u16(0).label("abc");
    expect_dns_error(past_end.bytes);
  }
}
