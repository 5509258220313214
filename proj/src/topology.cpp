#include "mvres/topology.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "mvres/error.hpp"
#include "text.hpp"

namespace mvres {
namespace {

std::uint64_t pair_key(Asn a, Asn b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

AsEdge normalized(AsEdge e) {
  if (e.relation == Relation::peer_to_peer && e.a > e.b) std::swap(e.a, e.b);
  return e;
}

bool edge_less(const AsEdge& x, const AsEdge& y) {
  return std::tie(x.a, x.b, x.relation) < std::tie(y.a, y.b, y.relation);
}

std::string describe(const AsEdge& e) {
  return std::to_string(e.a) + (e.relation == Relation::peer_to_peer ? " peer " : " provider of ") +
         std::to_string(e.b);
}

}  // namespace

AsGraph AsGraph::from_edges(std::span<const AsEdge> edges, std::span<const Asn> extra_nodes) {
  std::unordered_map<std::uint64_t, AsEdge> by_pair;
  by_pair.reserve(edges.size());
  for (const auto& raw : edges) {
    if (raw.a == raw.b) throw IngestError(0, "self edge on AS" + std::to_string(raw.a));
    const auto e = normalized(raw);
    auto [it, inserted] = by_pair.emplace(pair_key(e.a, e.b), e);
    if (!inserted && !(it->second == e)) {
      throw IngestError(0, "conflicting relations: " + describe(it->second) + " vs " + describe(e));
    }
  }

  AsGraph g;
  std::vector<Asn> nodes(extra_nodes.begin(), extra_nodes.end());
  g.edges_.reserve(by_pair.size());
  for (const auto& [key, e] : by_pair) {
    g.edges_.push_back(e);
    nodes.push_back(e.a);
    nodes.push_back(e.b);
  }
  std::sort(g.edges_.begin(), g.edges_.end(), edge_less);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  g.nodes_ = std::move(nodes);

  const auto n = g.nodes_.size();
  g.providers_.assign(n, {});
  g.customers_.assign(n, {});
  g.peers_.assign(n, {});
  for (const auto& e : g.edges_) {
    const auto ia = g.index_of(e.a);
    const auto ib = g.index_of(e.b);
    if (e.relation == Relation::provider_to_customer) {
      g.customers_[ia].push_back(ib);
      g.providers_[ib].push_back(ia);
    } else {
      g.peers_[ia].push_back(ib);
      g.peers_[ib].push_back(ia);
    }
  }
  for (auto* lists : {&g.providers_, &g.customers_, &g.peers_}) {
    for (auto& l : *lists) std::sort(l.begin(), l.end());
  }
  return g;
}

std::uint32_t AsGraph::index_of(Asn asn) const noexcept {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), asn);
  if (it == nodes_.end() || *it != asn) return npos;
  return static_cast<std::uint32_t>(it - nodes_.begin());
}

std::optional<Relation> AsGraph::relation(Asn a, Asn b) const {
  const auto ia = index_of(a);
  const auto ib = index_of(b);
  if (ia == npos || ib == npos) return std::nullopt;
  auto has = [](std::span<const std::uint32_t> list, std::uint32_t x) {
    return std::binary_search(list.begin(), list.end(), x);
  };
  if (has(customers(ia), ib) || has(providers(ia), ib)) return Relation::provider_to_customer;
  if (has(peers(ia), ib)) return Relation::peer_to_peer;
  return std::nullopt;
}

bool AsGraph::is_provider_of(Asn provider, Asn customer) const {
  const auto ip = index_of(provider);
  const auto ic = index_of(customer);
  if (ip == npos || ic == npos) return false;
  auto c = customers(ip);
  return std::binary_search(c.begin(), c.end(), ic);
}

AsGraph load_as_relationships(std::istream& in) {
  std::vector<AsEdge> edges;
  std::unordered_map<std::uint64_t, std::pair<AsEdge, std::size_t>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    const auto fields = text::split(line, '|');
    if (fields.size() < 3 || fields.size() > 4) {
      throw IngestError(line_no, "expected <asn>|<asn>|<rel>[|source], got " +
                                     std::to_string(fields.size()) + " fields");
    }
    const auto a = text::parse_int<Asn>(fields[0]);
    const auto b = text::parse_int<Asn>(fields[1]);
    const auto rel = text::parse_int<int>(fields[2]);
    if (!a || !b) throw IngestError(line_no, "invalid AS number");
    if (!rel || (*rel != -1 && *rel != 0)) throw IngestError(line_no, "relation must be -1 or 0");
    if (*a == *b) throw IngestError(line_no, "self edge on AS" + std::to_string(*a));
    const auto e = normalized({*a, *b, *rel == -1 ? Relation::provider_to_customer : Relation::peer_to_peer});
    auto [it, inserted] = seen.emplace(pair_key(e.a, e.b), std::pair{e, line_no});
    if (!inserted) {
      if (!(it->second.first == e)) {
        throw IngestError(line_no, "conflicting relation " + describe(e) + " (line " +
                                       std::to_string(it->second.second) + " declared " +
                                       describe(it->second.first) + ")");
      }
      continue;
    }
    edges.push_back(e);
  }
  return AsGraph::from_edges(edges);
}

void write_as_relationships(const AsGraph& graph, std::ostream& out) {
  for (const auto& e : graph.edges()) {
    out << e.a << '|' << e.b << '|' << (e.relation == Relation::provider_to_customer ? "-1" : "0")
        << '\n';
  }
}

std::vector<DatacenterPeerSet> load_datacenter_peers(std::istream& in) {
  std::map<std::string, DatacenterPeerSet> sets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 3) throw IngestError(line_no, "expected datacenter_id,host_asn,peer_asn");
    if (fields[0] == "datacenter_id") continue;  // header
    const auto host = text::parse_int<Asn>(fields[1]);
    const auto peer = text::parse_int<Asn>(fields[2]);
    if (fields[0].empty()) throw IngestError(line_no, "empty datacenter id");
    if (!host || !peer) throw IngestError(line_no, "invalid AS number");
    if (*host == *peer) throw IngestError(line_no, "datacenter host AS listed as its own peer");
    auto& set = sets[std::string(fields[0])];
    if (set.datacenter_id.empty()) {
      set.datacenter_id = std::string(fields[0]);
      set.host_as = *host;
    } else if (set.host_as != *host) {
      throw IngestError(line_no, "datacenter " + set.datacenter_id + " has two host ASes");
    }
    set.peers.push_back(*peer);
  }
  std::vector<DatacenterPeerSet> out;
  for (auto& [id, set] : sets) {
    std::sort(set.peers.begin(), set.peers.end());
    set.peers.erase(std::unique(set.peers.begin(), set.peers.end()), set.peers.end());
    out.push_back(std::move(set));
  }
  return out;
}

AsGraph augment_with_datacenter_peers(const AsGraph& graph,
                                      std::span<const DatacenterPeerSet> peer_sets) {
  std::vector<AsEdge> edges = graph.edges();
  std::vector<Asn> nodes(graph.nodes().begin(), graph.nodes().end());
  std::set<std::uint64_t> connected;
  for (const auto& e : edges) connected.insert(pair_key(e.a, e.b));
  for (const auto& set : peer_sets) {
    nodes.push_back(set.host_as);
    for (Asn peer : set.peers) {
      if (peer == set.host_as) continue;
      if (connected.insert(pair_key(set.host_as, peer)).second) {
        edges.push_back({set.host_as, peer, Relation::peer_to_peer});
      }
    }
  }
  return AsGraph::from_edges(edges, nodes);
}

PrefixTable::PrefixTable(std::vector<PrefixEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const PrefixEntry& x, const PrefixEntry& y) { return x.prefix < y.prefix; });
  for (auto& e : entries) {
    if (!entries_.empty() && entries_.back().prefix == e.prefix) {
      auto& origins = entries_.back().origins;
      origins.insert(origins.end(), e.origins.begin(), e.origins.end());
    } else {
      entries_.push_back(std::move(e));
    }
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& origins = entries_[i].origins;
    std::sort(origins.begin(), origins.end());
    origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
    if (origins.empty()) {
      throw InputError("prefix " + entries_[i].prefix.str() + " has no origin");
    }
    trie_.insert(entries_[i].prefix, static_cast<std::uint32_t>(i));
  }
}

const PrefixEntry* PrefixTable::longest_match(const IpAddress& address) const {
  const auto idx = trie_.longest_match(address);
  return idx ? &entries_[*idx] : nullptr;
}

PrefixTable load_prefix_origins(std::istream& in) {
  std::vector<PrefixEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::skippable(line)) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 2) throw IngestError(line_no, "expected cidr,asn");
    if (fields[0] == "cidr") continue;  // header
    const auto prefix = Prefix::parse(fields[0]);
    if (!prefix) throw IngestError(line_no, "unparsable CIDR '" + std::string(fields[0]) + "'");
    const auto asn = text::parse_int<Asn>(fields[1]);
    if (!asn) throw IngestError(line_no, "invalid AS number '" + std::string(fields[1]) + "'");
    entries.push_back({*prefix, {*asn}});
  }
  return PrefixTable(std::move(entries));
}

std::vector<PrefixGroup> group_prefixes_by_origin(const PrefixTable& table) {
  std::map<std::vector<Asn>, std::vector<Prefix>> by_origins;
  for (const auto& e : table.entries()) by_origins[e.origins].push_back(e.prefix);
  std::vector<PrefixGroup> groups;
  groups.reserve(by_origins.size());
  for (auto& [origins, members] : by_origins) {
    groups.push_back({static_cast<std::uint32_t>(groups.size()), origins, std::move(members), false});
  }
  return groups;
}

GroupIndex::GroupIndex(std::span<const PrefixGroup> groups) {
  for (const auto& g : groups) {
    for (const auto& p : g.members) trie_.insert(p, g.id);
    empty_ = false;
  }
}

std::optional<std::uint32_t> GroupIndex::group_of(const IpAddress& address) const {
  if (empty_) return std::nullopt;
  return trie_.longest_match(address);
}

}  // namespace mvres
