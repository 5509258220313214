#include "support/stable_state_oracle.hpp"

#include <algorithm>
#include <tuple>

namespace mvres::testing {

RoutingState stable_state_oracle(const AsGraph& graph, std::span<const Announcement> announcements,
                                 const RovFilter* filter) {
  const auto n = graph.size();
  if (n > 14) throw OracleError("oracle limited to 14 ASes");
  const auto nodes = graph.nodes();

  std::vector<std::optional<Route>> current(n);
  std::vector<bool> announcer(n, false);
  for (std::size_t a = 0; a < announcements.size(); ++a) {
    const auto i = graph.index_of(announcements[a].announcer);
    if (i == AsGraph::npos) throw OracleError("announcer outside graph");
    announcer[i] = true;
    current[i] = Route{std::nullopt, announcements[a].as_path, RouteClass::self,
                       static_cast<std::uint32_t>(a)};
  }
  auto filters = [&](Asn asn) {
    return filter && std::find(filter->filtering_ases.begin(), filter->filtering_ases.end(), asn) !=
                         filter->filtering_ases.end();
  };

  const std::size_t max_rounds = std::max<std::size_t>(n * n, 4);
  for (std::size_t round = 0; round < max_rounds; ++round) {
    auto next = current;
    for (std::size_t x = 0; x < n; ++x) {
      if (announcer[x]) continue;
      const Asn self = nodes[x];
      std::optional<Route> best;
      for (std::size_t y = 0; y < n; ++y) {
        const auto& offered = current[y];
        if (!offered) continue;
        const Asn neighbour = nodes[y];
        const auto rel = graph.relation(self, neighbour);
        if (!rel) continue;
        RouteClass learned;
        if (*rel == Relation::peer_to_peer) {
          learned = RouteClass::peer;
        } else if (graph.is_provider_of(self, neighbour)) {
          learned = RouteClass::customer;
        } else {
          learned = RouteClass::provider;
        }
        // Neighbour exports only originated/customer routes, except to its customers.
        const bool exported = offered->route_class == RouteClass::self ||
                              offered->route_class == RouteClass::customer ||
                              learned == RouteClass::provider;
        if (!exported) continue;
        if (std::find(offered->as_path.begin(), offered->as_path.end(), self) != offered->as_path.end()) {
          continue;
        }
        if (filters(self) && offered->as_path.back() != filter->valid_origin) continue;
        Route candidate{neighbour, {self}, learned, offered->announcement};
        candidate.as_path.insert(candidate.as_path.end(), offered->as_path.begin(), offered->as_path.end());
        auto key = [](const Route& r) {
          return std::make_tuple(static_cast<int>(r.route_class), r.as_path.size(), *r.next_hop);
        };
        if (!best || key(candidate) < key(*best)) best = std::move(candidate);
      }
      next[x] = std::move(best);
    }
    if (next == current) return RoutingState(graph, std::move(current));
    current = std::move(next);
  }
  throw OracleError("no stable state within |AS|^2 rounds");
}

}  // namespace mvres::testing
