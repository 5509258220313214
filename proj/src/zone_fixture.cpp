#include "mvres/zone_fixture.hpp"

#include <istream>
#include <sstream>

#include "json.hpp"

namespace mvres {
namespace {

using Json = nlohmann::json;

IpAddress parse_ip(const Json& value, const std::string& where) {
  if (!value.is_string()) throw InputError("zone fixture: non-string address in " + where);
  auto ip = IpAddress::parse(value.get<std::string>());
  if (!ip) throw InputError("zone fixture: bad address '" + value.get<std::string>() + "' in " + where);
  return *ip;
}

std::vector<IpAddress> parse_ip_list(const Json& value, const std::string& where) {
  if (!value.is_array()) throw InputError("zone fixture: expected address list in " + where);
  std::vector<IpAddress> out;
  for (const auto& v : value) out.push_back(parse_ip(v, where));
  return out;
}

std::vector<std::vector<IpAddress>> parse_rotation(const Json& value, const std::string& where) {
  if (!value.is_array()) throw InputError("zone fixture: expected list in " + where);
  std::vector<std::vector<IpAddress>> out;
  if (value.empty()) return out;
  if (value.front().is_array()) {
    for (const auto& attempt : value) out.push_back(parse_ip_list(attempt, where));
  } else {
    out.push_back(parse_ip_list(value, where));
  }
  return out;
}

template <typename Tables>
void parse_tables(const Json& doc, Tables& tables, const std::string& scope) {
  if (doc.contains("zones")) {
    for (const auto& [raw, z] : doc.at("zones").items()) {
      const auto zone = normalize_name(raw);
      const auto where = scope + "zone " + zone;
      if (zone == ".") throw InputError("zone fixture: the root zone has no referral (" + where + ")");
      Delegation d;
      for (const auto& ns : z.value("ns", Json::array())) d.nameservers.push_back(normalize_name(ns.template get<std::string>()));
      d.ds_present = z.value("ds", false);
      if (z.contains("glue")) {
        for (const auto& [name, ips] : z.at("glue").items()) {
          d.glue[normalize_name(name)] = parse_ip_list(ips, where);
        }
      }
      tables.zones[zone] = std::move(d);
    }
  }
  if (doc.contains("names")) {
    for (const auto& [raw, n] : doc.at("names").items()) {
      const auto name = normalize_name(raw);
      const auto where = scope + "name " + name;
      typename decltype(tables.names)::mapped_type entry;
      if (n.contains("a")) entry.a = parse_rotation(n.at("a"), where);
      if (n.contains("aaaa")) entry.aaaa = parse_rotation(n.at("aaaa"), where);
      if (n.contains("cname")) entry.cname = normalize_name(n.at("cname").template get<std::string>());
      tables.names[name] = std::move(entry);
    }
  }
}

template <typename T>
const T* find_in(const std::map<std::string, T>& m, const std::string& key) {
  auto it = m.find(key);
  return it == m.end() ? nullptr : &it->second;
}

std::vector<IpAddress> pick(const std::vector<std::vector<IpAddress>>& rotation, int attempt) {
  if (rotation.empty()) return {};
  return rotation[static_cast<std::size_t>(attempt) % rotation.size()];
}

}  // namespace

FixtureZoneOracle FixtureZoneOracle::parse(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

FixtureZoneOracle FixtureZoneOracle::parse(const std::string& json_text) {
  FixtureZoneOracle oracle;
  try {
    const auto doc = Json::parse(json_text);
    if (!doc.is_object()) throw InputError("zone fixture: top level must be an object");
    parse_tables(doc, oracle.global_, "");
    if (doc.contains("regions")) {
      for (const auto& [region, body] : doc.at("regions").items()) {
        parse_tables(body, oracle.regions_[region], "region " + region + ", ");
      }
    }
  } catch (const Json::exception& e) {
    throw InputError(std::string("zone fixture: ") + e.what());
  }
  return oracle;
}

std::optional<Delegation> FixtureZoneOracle::delegation(const std::string& zone, const std::string& region) {
  if (auto r = find_in(regions_, region)) {
    if (auto d = find_in(r->zones, zone)) return *d;
  }
  if (auto d = find_in(global_.zones, zone)) return *d;
  return std::nullopt;
}

std::optional<AddressAnswer> FixtureZoneOracle::address_records(const std::string& name, const std::string& region,
                                                                int attempt) {
  const NameEntry* entry = nullptr;
  if (auto r = find_in(regions_, region)) entry = find_in(r->names, name);
  if (!entry) entry = find_in(global_.names, name);
  if (!entry) return std::nullopt;
  AddressAnswer answer;
  answer.cname = entry->cname;
  if (!answer.cname) {
    answer.a = pick(entry->a, attempt);
    answer.aaaa = pick(entry->aaaa, attempt);
  }
  return answer;
}

}  // namespace mvres
