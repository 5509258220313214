#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "mvres/dns_surface.hpp"

namespace mvres {

/// ZoneOracle backed by a JSON document:
///
///   {"zones":   {"example.com": {"ns": [...], "ds": false, "glue": {"ns1.x": ["192.0.2.1"]}}},
///    "names":   {"example.com": {"a": [["192.0.2.10"], ["192.0.2.11"]], "aaaa": [], "cname": "..."}},
///    "regions": {"eu-west-3": {"zones": {...}, "names": {...}}}}
///
/// `a` and `aaaa` are either a flat address list or a list of per-attempt
/// lists; attempt i reads entry i modulo the list length. Region entries
/// replace the global entry of the same name.
class FixtureZoneOracle : public ZoneOracle {
 public:
  static FixtureZoneOracle parse(std::istream& in);
  static FixtureZoneOracle parse(const std::string& json_text);

  std::optional<Delegation> delegation(const std::string& zone, const std::string& region) override;
  std::optional<AddressAnswer> address_records(const std::string& name, const std::string& region,
                                               int attempt) override;

 private:
  struct NameEntry {
    std::vector<std::vector<IpAddress>> a;
    std::vector<std::vector<IpAddress>> aaaa;
    std::optional<std::string> cname;
  };
  struct Tables {
    std::map<std::string, Delegation> zones;
    std::map<std::string, NameEntry> names;
  };

  Tables global_;
  std::map<std::string, Tables> regions_;
};

}  // namespace mvres
