#include "mvres/dns_surface.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace mvres {
namespace {

using Json = nlohmann::json;

bool valid_label_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
}

// Suffixes of `name` from the TLD down to `name` itself.
std::vector<std::string> zone_candidates(const std::string& name) {
  std::vector<std::string> out;
  if (name == ".") return out;
  std::size_t pos = name.size();
  while (true) {
    const auto dot = name.rfind('.', pos - 1);
    out.push_back(dot == std::string::npos ? name : name.substr(dot + 1));
    if (dot == std::string::npos || dot == 0) break;
    pos = dot;
  }
  return out;
}

struct NameResult {
  std::set<IpAddress> addresses;
  std::set<IpAddress> contacted;
  std::optional<std::string> failure;
  // Set when a cycle was cut somewhere below; such results depend on the
  // resolution stack and are not memoized.
  bool context_dependent = false;
};

// One lookup attempt. Accumulates DNSSEC cuts and glueless names into the
// caller's surface.
class Walk {
 public:
  Walk(ZoneOracle& oracle, const std::string& region, int attempt, const SurfaceOptions& options,
       AttackSurface& surface)
      : oracle_(oracle), region_(region), attempt_(attempt), options_(options), surface_(surface) {}

  NameResult resolve(const std::string& name) {
    if (auto it = memo_.find(name); it != memo_.end()) return it->second;
    if (auto it = std::find(stack_.begin(), stack_.end(), name); it != stack_.end()) {
      std::string cycle;
      for (; it != stack_.end(); ++it) cycle += *it + " -> ";
      NameResult cut;
      cut.failure = "delegation cycle: " + cycle + name;
      cut.context_dependent = true;
      return cut;
    }
    if (static_cast<int>(stack_.size()) >= options_.max_depth) {
      std::string path;
      for (const auto& s : stack_) path += s + " -> ";
      throw ResolutionError("glueless recursion deeper than " + std::to_string(options_.max_depth) +
                                ": " + path + name,
                            surface_);
    }
    stack_.push_back(name);
    NameResult result;
    std::string current = name;
    std::set<std::string> seen{current};
    for (int links = 0;; ++links) {
      bool chain_ok = true;
      for (const auto& zone : zone_candidates(current)) {
        auto referral = oracle_.delegation(zone, region_);
        if (!referral) continue;
        if (!contribute(zone, *referral, result)) {
          chain_ok = false;
          break;
        }
      }
      if (!chain_ok) break;
      auto answer = oracle_.address_records(current, region_, attempt_);
      if (!answer) {
        if (!result.failure) result.failure = "no records for " + current;
        break;
      }
      if (answer->cname) {
        if (links + 1 > options_.max_cname_links) {
          throw ResolutionError("CNAME chain from " + name + " longer than " +
                                    std::to_string(options_.max_cname_links),
                                surface_);
        }
        current = normalize_name(*answer->cname);
        if (!seen.insert(current).second) throw ResolutionError("CNAME loop at " + current, surface_);
        continue;
      }
      result.addresses.insert(answer->a.begin(), answer->a.end());
      result.addresses.insert(answer->aaaa.begin(), answer->aaaa.end());
      if (result.addresses.empty() && !result.failure) result.failure = "no address records for " + current;
      break;
    }
    if (!result.addresses.empty()) result.failure.reset();
    stack_.pop_back();
    if (!result.context_dependent) memo_[name] = result;
    return result;
  }

 private:
  // False when no nameserver of the zone can be reached.
  bool contribute(const std::string& zone, const Delegation& referral, NameResult& into) {
    if (referral.ds_present && options_.honor_dnssec) {
      surface_.dnssec_cut_zones.insert(zone);
      return true;
    }
    if (referral.nameservers.empty()) {
      into.failure = "zone " + zone + " has no nameservers";
      return false;
    }
    bool reachable = false;
    std::optional<std::string> why;
    for (const auto& raw : referral.nameservers) {
      const auto ns = normalize_name(raw);
      auto glue = referral.glue.find(ns);
      if (glue == referral.glue.end()) glue = referral.glue.find(raw);
      if (glue != referral.glue.end() && !glue->second.empty()) {
        into.contacted.insert(glue->second.begin(), glue->second.end());
        reachable = true;
        continue;
      }
      surface_.glueless_names.insert(ns);
      auto sub = resolve(ns);
      into.contacted.insert(sub.contacted.begin(), sub.contacted.end());
      into.contacted.insert(sub.addresses.begin(), sub.addresses.end());
      into.context_dependent = into.context_dependent || sub.context_dependent;
      if (!sub.addresses.empty()) {
        reachable = true;
      } else if (!why) {
        why = sub.failure;
      }
    }
    if (!reachable) {
      into.failure = "zone " + zone + " has no reachable nameserver" + (why ? " (" + *why + ")" : "");
    }
    return reachable;
  }

  ZoneOracle& oracle_;
  const std::string& region_;
  int attempt_;
  const SurfaceOptions& options_;
  AttackSurface& surface_;
  std::vector<std::string> stack_;
  std::map<std::string, NameResult> memo_;
};

void finish(AttackSurface& s) {
  s.target_ips = s.a_record_ips;
  s.target_ips.insert(s.nameserver_ips.begin(), s.nameserver_ips.end());
}

Json ips_json(const std::set<IpAddress>& ips) {
  Json out = Json::array();
  for (const auto& ip : ips) out.push_back(ip.str());
  return out;
}

std::set<IpAddress> ips_from(const Json& j, const char* field) {
  std::set<IpAddress> out;
  if (!j.contains(field)) return out;
  for (const auto& v : j.at(field)) {
    auto ip = IpAddress::parse(v.get<std::string>());
    if (!ip) throw InputError(std::string("bad address in surface log field ") + field);
    out.insert(*ip);
  }
  return out;
}

}  // namespace

std::string normalize_name(std::string_view name) {
  if (name == "." ) return ".";
  std::string out(name);
  if (!out.empty() && out.back() == '.') out.pop_back();
  if (out.empty() || out.size() > 253) throw InputError("invalid domain name '" + std::string(name) + "'");
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::size_t label = 0;
  for (char c : out) {
    if (c == '.') {
      if (label == 0) throw InputError("empty label in '" + std::string(name) + "'");
      label = 0;
    } else if (!valid_label_char(c) || ++label > 63) {
      throw InputError("invalid domain name '" + std::string(name) + "'");
    }
  }
  if (label == 0) throw InputError("empty label in '" + std::string(name) + "'");
  return out;
}

AttackSurface resolve_attack_surface(ZoneOracle& oracle, std::string_view domain, const std::string& region,
                                     const SurfaceOptions& options) {
  if (options.repeats < 1) throw InputError("repeats must be at least 1");
  AttackSurface surface;
  surface.domain = normalize_name(domain);
  surface.region = region;
  std::optional<std::string> failure;
  for (int attempt = 0; attempt < options.repeats; ++attempt) {
    Walk walk(oracle, region, attempt, options, surface);
    auto result = walk.resolve(surface.domain);
    surface.a_record_ips.insert(result.addresses.begin(), result.addresses.end());
    surface.nameserver_ips.insert(result.contacted.begin(), result.contacted.end());
    if (result.failure && !failure) failure = result.failure;
    finish(surface);
  }
  if (surface.a_record_ips.empty()) {
    throw ResolutionError(surface.domain + " unresolvable from " + region + ": " +
                              failure.value_or("no address records"),
                          surface);
  }
  return surface;
}

std::set<IpAddress> nameserver_surface(ZoneOracle& oracle, std::string_view ns_name,
                                       const std::optional<std::vector<IpAddress>>& glue,
                                       const std::string& region, const SurfaceOptions& options) {
  if (glue && !glue->empty()) return {glue->begin(), glue->end()};
  return resolve_attack_surface(oracle, ns_name, region, options).target_ips;
}

AttackSurface surface_union_across_regions(std::span<const AttackSurface> surfaces) {
  if (surfaces.empty()) throw InputError("no surfaces to combine");
  if (surfaces.size() == 1) return surfaces.front();
  AttackSurface out;
  out.domain = surfaces.front().domain;
  out.region = "all";
  for (const auto& s : surfaces) {
    if (s.domain != out.domain) throw InputError("cannot combine surfaces of " + out.domain + " and " + s.domain);
    out.a_record_ips.insert(s.a_record_ips.begin(), s.a_record_ips.end());
    out.nameserver_ips.insert(s.nameserver_ips.begin(), s.nameserver_ips.end());
    out.dnssec_cut_zones.insert(s.dnssec_cut_zones.begin(), s.dnssec_cut_zones.end());
    out.glueless_names.insert(s.glueless_names.begin(), s.glueless_names.end());
  }
  finish(out);
  return out;
}

void write_surface_record(const SurfaceRecord& record, std::ostream& out) {
  const auto& s = record.surface;
  Json j = Json::object();
  j["domain"] = s.domain;
  j["region"] = s.region;
  j["status"] = record.error ? "error" : "ok";
  if (record.error) j["error"] = *record.error;
  j["target_ips"] = ips_json(s.target_ips);
  j["a_record_ips"] = ips_json(s.a_record_ips);
  j["nameserver_ips"] = ips_json(s.nameserver_ips);
  j["dnssec_cut_zones"] = s.dnssec_cut_zones;
  j["glueless_names"] = s.glueless_names;
  out << j.dump() << '\n';
}

std::vector<SurfaceRecord> read_surface_log(std::istream& in) {
  std::vector<SurfaceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = Json::parse(line);
      SurfaceRecord r;
      r.surface.domain = j.at("domain").get<std::string>();
      r.surface.region = j.at("region").get<std::string>();
      if (j.value("status", "ok") != "ok") r.error = j.value("error", "unknown error");
      r.surface.a_record_ips = ips_from(j, "a_record_ips");
      r.surface.nameserver_ips = ips_from(j, "nameserver_ips");
      finish(r.surface);
      if (j.contains("dnssec_cut_zones")) r.surface.dnssec_cut_zones = j.at("dnssec_cut_zones").get<std::set<std::string>>();
      if (j.contains("glueless_names")) r.surface.glueless_names = j.at("glueless_names").get<std::set<std::string>>();
      out.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw IngestError(line_no, std::string("malformed surface record: ") + e.what());
    } catch (const InputError& e) {
      throw IngestError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace mvres
