#include "mvres/routing.hpp"

#include <algorithm>
#include <functional>

#include "mvres/error.hpp"

namespace mvres {

Announcement Announcement::legitimate(Asn origin) {
  return {origin, {origin}, AnnouncementKind::legitimate};
}

Announcement Announcement::plain_hijack(Asn adversary) {
  return {adversary, {adversary}, AnnouncementKind::plain_hijack};
}

Announcement Announcement::prepend_hijack(Asn adversary, Asn victim_origin) {
  return {adversary, {adversary, victim_origin}, AnnouncementKind::prepend_hijack};
}

RoutingState::RoutingState(const AsGraph& graph, std::vector<std::optional<Route>> routes)
    : nodes_(graph.nodes().begin(), graph.nodes().end()), routes_(std::move(routes)) {}

const std::optional<Route>& RoutingState::route(Asn asn) const {
  static const std::optional<Route> missing;
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), asn);
  if (it == nodes_.end() || *it != asn) return missing;
  return routes_[static_cast<std::size_t>(it - nodes_.begin())];
}

Propagator::Propagator(const AsGraph& graph)
    : graph_(&graph), entries_(graph.size()), filtering_(graph.size(), 0) {}

bool Propagator::acceptable(std::uint32_t at, std::uint8_t announcement) const {
  if (filtering_[at] && !origin_valid_[announcement]) return false;
  const auto& tail = announced_tail_[announcement];
  return std::find(tail.begin(), tail.end(), at) == tail.end();
}

void Propagator::push_offer(std::uint32_t from, std::uint32_t to) {
  heap_.push_back({entries_[from].length + 1, from, to});
  std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
}

void Propagator::drain(RouteClass route_class, bool climb) {
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), std::greater<>{});
    const Offer offer = heap_.back();
    heap_.pop_back();
    auto& target = entries_[offer.to];
    if (target.routed()) continue;
    const auto announcement = entries_[offer.from].announcement;
    if (!acceptable(offer.to, announcement)) continue;
    target = {offer.from, offer.length, route_class, announcement};
    for (auto next : climb ? graph_->providers(offer.to) : graph_->customers(offer.to)) {
      if (!entries_[next].routed()) push_offer(offer.to, next);
    }
  }
}

void Propagator::run(std::span<const Announcement> announcements, const RovFilter* filter) {
  if (announcements.size() >= UINT8_MAX) throw InputError("too many announcements");
  std::fill(entries_.begin(), entries_.end(), RouteEntry{});
  for (auto i : filtering_touched_) filtering_[i] = 0;
  filtering_touched_.clear();
  if (filter) {
    for (Asn asn : filter->filtering_ases) {
      const auto i = graph_->index_of(asn);
      if (i == AsGraph::npos) continue;
      filtering_[i] = 1;
      filtering_touched_.push_back(i);
    }
  }

  announced_tail_.assign(announcements.size(), {});
  origin_valid_.assign(announcements.size(), true);
  for (std::size_t a = 0; a < announcements.size(); ++a) {
    const auto& ann = announcements[a];
    const auto idx = graph_->index_of(ann.announcer);
    if (idx == AsGraph::npos) {
      throw InputError("announcer AS" + std::to_string(ann.announcer) + " is not in the topology");
    }
    if (ann.as_path.empty() || ann.as_path.front() != ann.announcer) {
      throw InputError("announced path must start with the announcer");
    }
    if (entries_[idx].routed()) {
      throw InputError("AS" + std::to_string(ann.announcer) + " announces more than once");
    }
    entries_[idx] = {RouteEntry::none, static_cast<std::uint32_t>(ann.as_path.size()),
                     RouteClass::self, static_cast<std::uint8_t>(a)};
    for (std::size_t k = 1; k < ann.as_path.size(); ++k) {
      const auto t = graph_->index_of(ann.as_path[k]);
      if (t != AsGraph::npos) announced_tail_[a].push_back(t);
    }
    if (filter) origin_valid_[a] = ann.claimed_origin() == filter->valid_origin;
  }

  // Customer routes, shortest first.
  heap_.clear();
  for (std::uint32_t i = 0; i < entries_.size(); ++i) {
    if (!entries_[i].routed()) continue;
    for (auto p : graph_->providers(i)) {
      if (!entries_[p].routed()) push_offer(i, p);
    }
  }
  drain(RouteClass::customer, true);

  // Peer routes: one hop from any AS holding an originated or customer route.
  const auto n = static_cast<std::uint32_t>(entries_.size());
  std::vector<RouteEntry> peer_routes;
  std::vector<std::uint32_t> peer_targets;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (entries_[i].routed()) continue;
    RouteEntry best;
    for (auto p : graph_->peers(i)) {
      const auto& e = entries_[p];
      if (!e.routed() || e.route_class == RouteClass::peer) continue;
      if (!acceptable(i, e.announcement)) continue;
      if (!best.routed() || e.length + 1 < best.length) {
        best = {p, e.length + 1, RouteClass::peer, e.announcement};
      }
    }
    if (best.routed()) {
      peer_routes.push_back(best);
      peer_targets.push_back(i);
    }
  }
  for (std::size_t k = 0; k < peer_targets.size(); ++k) entries_[peer_targets[k]] = peer_routes[k];

  // Provider routes descend, shortest first.
  heap_.clear();
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!entries_[i].routed()) continue;
    for (auto c : graph_->customers(i)) {
      if (!entries_[c].routed()) push_offer(i, c);
    }
  }
  drain(RouteClass::provider, false);
}

RoutingState Propagator::materialize(std::span<const Announcement> announcements) const {
  std::vector<std::optional<Route>> routes(entries_.size());
  for (std::uint32_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!e.routed()) continue;
    Route r;
    r.route_class = e.route_class;
    r.announcement = e.announcement;
    auto at = i;
    while (entries_[at].next_hop != RouteEntry::none) {
      r.as_path.push_back(graph_->asn_at(at));
      at = entries_[at].next_hop;
    }
    const auto& announced = announcements[e.announcement].as_path;
    r.as_path.insert(r.as_path.end(), announced.begin(), announced.end());
    if (e.next_hop != RouteEntry::none) r.next_hop = graph_->asn_at(e.next_hop);
    routes[i] = std::move(r);
  }
  return RoutingState(*graph_, std::move(routes));
}

RoutingState propagate_routes(const AsGraph& graph, std::span<const Announcement> announcements,
                              const RovFilter* filter) {
  Propagator propagator(graph);
  propagator.run(announcements, filter);
  return propagator.materialize(announcements);
}

bool is_valley_free(const AsGraph& graph, std::span<const Asn> hops) {
  // Phase 0: still climbing; 1: crossed a peer link or started descending.
  int phase = 0;
  for (std::size_t i = hops.size(); i-- > 1;) {
    const Asn from = hops[i];
    const Asn to = hops[i - 1];
    const auto rel = graph.relation(from, to);
    if (!rel) return false;
    if (*rel == Relation::peer_to_peer) {
      if (phase != 0) return false;
      phase = 1;
    } else if (graph.is_provider_of(to, from)) {
      if (phase != 0) return false;  // climbing after the top
    } else {
      phase = 1;
    }
  }
  return true;
}

}  // namespace mvres
