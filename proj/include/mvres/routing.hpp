#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "mvres/topology.hpp"

namespace mvres {

enum class AnnouncementKind : std::uint8_t { legitimate, plain_hijack, prepend_hijack };

/// A route origination for the prefix under simulation. `as_path` is the
/// path as announced: the announcer first, the claimed origin last.
struct Announcement {
  Asn announcer = 0;
  std::vector<Asn> as_path;
  AnnouncementKind kind = AnnouncementKind::legitimate;

  static Announcement legitimate(Asn origin);
  static Announcement plain_hijack(Asn adversary);
  static Announcement prepend_hijack(Asn adversary, Asn victim_origin);

  Asn claimed_origin() const { return as_path.back(); }
};

/// How a route was learned, in decreasing order of preference.
enum class RouteClass : std::uint8_t { self = 0, customer = 1, peer = 2, provider = 3 };

/// A chosen route. `as_path` starts at the AS holding the route and ends at
/// the claimed origin, so an announcer's path is its announced path.
struct Route {
  std::optional<Asn> next_hop;
  std::vector<Asn> as_path;
  RouteClass route_class = RouteClass::self;
  std::uint32_t announcement = 0;  // index into the announcement list

  bool operator==(const Route&) const = default;
};

/// Import filter applied by route-origin-validating ASes: routes whose
/// claimed origin differs from `valid_origin` are discarded.
struct RovFilter {
  std::vector<Asn> filtering_ases;
  Asn valid_origin = 0;
};

class RoutingState {
 public:
  RoutingState() = default;
  RoutingState(const AsGraph& graph, std::vector<std::optional<Route>> routes);

  const std::optional<Route>& route(Asn asn) const;
  std::span<const std::optional<Route>> routes() const noexcept { return routes_; }
  std::span<const Asn> nodes() const noexcept { return nodes_; }

  bool operator==(const RoutingState&) const = default;

 private:
  std::vector<Asn> nodes_;
  std::vector<std::optional<Route>> routes_;
};

/// Stable Gao-Rexford routing for one prefix. Preference is customer >
/// peer > provider, then shorter path, then lower next-hop ASN. Routes
/// learned from customers (or originated) are exported to every neighbour;
/// peer- and provider-learned routes only to customers.
///
/// Throws InputError if an announcer is absent from the graph or announces
/// twice.
RoutingState propagate_routes(const AsGraph& graph, std::span<const Announcement> announcements,
                              const RovFilter* filter = nullptr);

/// Compact per-AS result of a propagation, indexed like AsGraph nodes.
struct RouteEntry {
  static constexpr std::uint32_t none = UINT32_MAX;

  std::uint32_t next_hop = none;  // graph index; `none` for announcers
  std::uint32_t length = 0;       // as_path length including the AS itself
  RouteClass route_class = RouteClass::self;
  std::uint8_t announcement = UINT8_MAX;  // UINT8_MAX when unrouted

  bool routed() const noexcept { return announcement != UINT8_MAX; }
};

/// Reusable propagation engine. Three passes: customer routes climb the
/// hierarchy in order of path length, peers take one hop across, then
/// provider routes descend. Scratch buffers are kept between runs.
class Propagator {
 public:
  explicit Propagator(const AsGraph& graph);

  void run(std::span<const Announcement> announcements, const RovFilter* filter = nullptr);

  std::span<const RouteEntry> entries() const noexcept { return entries_; }
  const RouteEntry& entry(std::uint32_t index) const { return entries_[index]; }
  RoutingState materialize(std::span<const Announcement> announcements) const;

 private:
  struct Offer {
    std::uint32_t length;
    std::uint32_t from;
    std::uint32_t to;
    bool operator>(const Offer& o) const {
      return std::tie(length, from, to) > std::tie(o.length, o.from, o.to);
    }
  };

  bool acceptable(std::uint32_t at, std::uint8_t announcement) const;
  void push_offer(std::uint32_t from, std::uint32_t to);
  void drain(RouteClass route_class, bool climb);

  const AsGraph* graph_;
  std::vector<RouteEntry> entries_;
  std::vector<std::uint8_t> filtering_;
  std::vector<std::uint32_t> filtering_touched_;
  std::vector<Offer> heap_;
  // Per announcement: ASes on the announced path other than the announcer,
  // and whether the claimed origin passes the ROV filter.
  std::vector<std::vector<std::uint32_t>> announced_tail_;
  std::vector<bool> origin_valid_;
};

/// Walks a hop sequence (route holder first, announcer last) and checks that
/// the propagation it implies went up customer-to-provider links, across at
/// most one peer link, then only down provider-to-customer links.
bool is_valley_free(const AsGraph& graph, std::span<const Asn> hops);

}  // namespace mvres
