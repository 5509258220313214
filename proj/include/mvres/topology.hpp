#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mvres/ip.hpp"

namespace mvres {

using Asn = std::uint32_t;

enum class Relation : std::uint8_t { provider_to_customer, peer_to_peer };

/// One inter-AS link. For provider_to_customer, `a` is the provider.
struct AsEdge {
  Asn a = 0;
  Asn b = 0;
  Relation relation = Relation::peer_to_peer;

  bool operator==(const AsEdge&) const = default;
};

/// Annotated AS-level topology. Nodes are kept in ascending ASN order and
/// addressed internally by dense index; neighbour lists are sorted by ASN.
class AsGraph {
 public:
  static constexpr std::uint32_t npos = UINT32_MAX;

  AsGraph() = default;

  /// Throws IngestError on self edges or conflicting duplicates.
  /// Identical duplicates collapse. `extra_nodes` may add isolated ASes.
  static AsGraph from_edges(std::span<const AsEdge> edges, std::span<const Asn> extra_nodes = {});

  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const Asn> nodes() const noexcept { return nodes_; }
  bool contains(Asn asn) const noexcept { return index_of(asn) != npos; }
  std::uint32_t index_of(Asn asn) const noexcept;
  Asn asn_at(std::uint32_t index) const noexcept { return nodes_[index]; }

  /// Edges sorted by (a, b); provider_to_customer edges keep provider first,
  /// peer edges are stored with a < b.
  const std::vector<AsEdge>& edges() const noexcept { return edges_; }

  /// Relation of `from` toward `to`: provider_to_customer means `from` is
  /// the provider of `to`. Returns nullopt when not adjacent.
  std::optional<Relation> relation(Asn a, Asn b) const;
  bool is_provider_of(Asn provider, Asn customer) const;

  std::span<const std::uint32_t> providers(std::uint32_t index) const { return providers_[index]; }
  std::span<const std::uint32_t> customers(std::uint32_t index) const { return customers_[index]; }
  std::span<const std::uint32_t> peers(std::uint32_t index) const { return peers_[index]; }

  bool operator==(const AsGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  std::vector<Asn> nodes_;
  std::vector<AsEdge> edges_;
  std::vector<std::vector<std::uint32_t>> providers_;
  std::vector<std::vector<std::uint32_t>> customers_;
  std::vector<std::vector<std::uint32_t>> peers_;
};

/// Parses CAIDA serial-2 relationship lines `<asn>|<asn>|<rel>[|source]`.
AsGraph load_as_relationships(std::istream& in);
void write_as_relationships(const AsGraph& graph, std::ostream& out);

struct DatacenterPeerSet {
  std::string datacenter_id;
  Asn host_as = 0;
  std::vector<Asn> peers;  // sorted, unique
};

/// CSV `datacenter_id,host_asn,peer_asn`, one peer per line.
std::vector<DatacenterPeerSet> load_datacenter_peers(std::istream& in);

/// Adds a peer_to_peer edge for every (host, peer) pair that is not already
/// adjacent. Existing relationships win. ASes absent from the graph are
/// inserted.
AsGraph augment_with_datacenter_peers(const AsGraph& graph,
                                      std::span<const DatacenterPeerSet> peer_sets);

struct PrefixEntry {
  Prefix prefix;
  std::vector<Asn> origins;  // sorted, unique, nonempty

  bool operator==(const PrefixEntry&) const = default;
};

/// Prefix to origin-AS table with longest-prefix-match lookup.
class PrefixTable {
 public:
  PrefixTable() = default;
  /// Merges repeated prefixes. Entries end up sorted by prefix.
  explicit PrefixTable(std::vector<PrefixEntry> entries);

  const std::vector<PrefixEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  /// The covering entry with the greatest prefix length, or nullptr.
  const PrefixEntry* longest_match(const IpAddress& address) const;

 private:
  std::vector<PrefixEntry> entries_;
  PrefixTrie trie_;
};

/// CSV `cidr,asn`.
PrefixTable load_prefix_origins(std::istream& in);

struct PrefixGroup {
  std::uint32_t id = 0;
  std::vector<Asn> origins;
  std::vector<Prefix> members;
  /// Set when the group was split by ROA coverage; all members agree.
  bool roa_covered = false;

  /// The AS treated as the legitimate announcer: the lowest-numbered origin.
  Asn legitimate_origin() const { return origins.front(); }

  bool operator==(const PrefixGroup&) const = default;
};

/// Partitions the table by identical origin set. Groups are ordered by
/// origin set, members by prefix, and ids are assigned 0..n-1 in that order.
std::vector<PrefixGroup> group_prefixes_by_origin(const PrefixTable& table);

/// Maps addresses to the prefix group of their longest-matching prefix.
class GroupIndex {
 public:
  GroupIndex() = default;
  explicit GroupIndex(std::span<const PrefixGroup> groups);

  std::optional<std::uint32_t> group_of(const IpAddress& address) const;

 private:
  PrefixTrie trie_;
  bool empty_ = true;
};

}  // namespace mvres
