#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvres/dns_surface.hpp"

namespace mvres {

namespace dns {

enum RecordType : std::uint16_t { A = 1, NS = 2, CNAME = 5, SOA = 6, AAAA = 28, OPT = 41, DS = 43 };

struct ResourceRecord {
  std::string name;  // normalized, root is "."
  std::uint16_t type = 0;
  std::uint16_t klass = 1;
  std::uint32_t ttl = 0;
  /// Decoded target for NS and CNAME.
  std::string target;
  /// Decoded address for A and AAAA.
  std::optional<IpAddress> address;
};

struct Message {
  std::uint16_t id = 0;
  bool response = false;
  bool authoritative = false;
  bool truncated = false;
  std::uint8_t rcode = 0;
  std::vector<ResourceRecord> answers;
  std::vector<ResourceRecord> authority;
  std::vector<ResourceRecord> additional;
};

/// Query for (name, type) with recursion off and an EDNS0 OPT record
/// advertising 1232 bytes and the DO bit, so referrals carry DS records.
std::vector<std::uint8_t> encode_query(std::uint16_t id, const std::string& name, std::uint16_t type);

/// Throws Error("dns") on truncated or malformed input, including
/// compression pointer loops.
Message decode_message(std::span<const std::uint8_t> wire);

}  // namespace dns

struct LiveOptions {
  std::chrono::milliseconds timeout{5000};
  int retries = 2;
  /// Minimum spacing between any two queries sent.
  std::chrono::milliseconds min_interval{50};
  std::vector<IpAddress> root_servers;  // empty: IANA root hints (IPv4)
};

/// Iterative resolver from the root, speaking plain DNS over UDP with TCP
/// fallback on truncation. Region labels are ignored: every query leaves
/// from this host. Not thread-safe.
class LiveZoneOracle : public ZoneOracle {
 public:
  explicit LiveZoneOracle(LiveOptions options = {});

  std::optional<Delegation> delegation(const std::string& zone, const std::string& region) override;
  std::optional<AddressAnswer> address_records(const std::string& name, const std::string& region,
                                               int attempt) override;

 private:
  std::vector<IpAddress> servers_for(const std::string& name, int depth);
  std::vector<IpAddress> addresses_of(const Delegation& d, int depth);
  std::optional<dns::Message> ask(const std::vector<IpAddress>& servers, const std::string& name,
                                  std::uint16_t type);
  dns::Message exchange(const IpAddress& server, const std::string& name, std::uint16_t type);
  void pace();

  LiveOptions options_;
  std::map<std::string, std::optional<Delegation>> cuts_;
  std::map<std::string, std::vector<IpAddress>> host_cache_;
  std::chrono::steady_clock::time_point last_query_{};
  std::uint16_t next_id_ = 1;
};

}  // namespace mvres
