#include "mvres/attack.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>

#include "mvres/error.hpp"
#include "mvres/parallel.hpp"

namespace mvres {
namespace {

template <typename T>
std::vector<T> sorted_unique(std::span<const T> values) {
  std::vector<T> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void require_in_graph(const AsGraph& graph, Asn asn, const char* role) {
  if (!graph.contains(asn)) {
    throw InputError(std::string(role) + " AS" + std::to_string(asn) + " is not in the topology");
  }
}

// Hijack bits at each vantage point for one propagation. `hijacker` is the
// announcement index whose descendants count as hijacked.
void collect_bits(const Propagator& propagator, std::span<const std::uint32_t> vp_indices,
                  std::uint8_t hijacker, std::vector<std::uint8_t>& out) {
  out.assign(vp_indices.size(), 0);
  for (std::size_t v = 0; v < vp_indices.size(); ++v) {
    const auto& e = propagator.entry(vp_indices[v]);
    out[v] = e.routed() && e.announcement == hijacker;
  }
}

constexpr char kMagic[8] = {'M', 'V', 'R', 'B', 'I', 'T', 'S', '1'};

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) put_u8(out, static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) put_u8(out, static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw InputError("bit store truncated");
  return static_cast<std::uint8_t>(c);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(get_u8(in)) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(get_u8(in)) << (8 * i);
  return v;
}

template <typename T>
std::optional<std::size_t> sorted_index(const std::vector<T>& values, T x) {
  auto it = std::lower_bound(values.begin(), values.end(), x);
  if (it == values.end() || *it != x) return std::nullopt;
  return static_cast<std::size_t>(it - values.begin());
}

}  // namespace

std::map<Asn, VpOutcome> simulate_attack(const AsGraph& graph, Asn victim_origin, Asn adversary,
                                         std::span<const Asn> vp_ases, AnnouncementKind kind,
                                         const AttackOptions& options) {
  if (victim_origin == adversary) throw InputError("adversary and victim are the same AS");
  if (kind == AnnouncementKind::legitimate) throw InputError("attack kind must be a hijack");
  require_in_graph(graph, victim_origin, "victim");
  require_in_graph(graph, adversary, "adversary");

  const std::vector<Announcement> announcements{
      Announcement::legitimate(victim_origin),
      kind == AnnouncementKind::plain_hijack ? Announcement::plain_hijack(adversary)
                                             : Announcement::prepend_hijack(adversary, victim_origin)};
  RovFilter filter{{vp_ases.begin(), vp_ases.end()}, victim_origin};
  Propagator propagator(graph);
  propagator.run(announcements, options.rov_at_vantage_points ? &filter : nullptr);

  std::map<Asn, VpOutcome> out;
  for (Asn vp : vp_ases) {
    require_in_graph(graph, vp, "vantage point");
    const auto& e = propagator.entry(graph.index_of(vp));
    out[vp] = {e.routed() && e.announcement == 1, !e.routed()};
  }
  return out;
}

AttackBitStore::AttackBitStore(std::vector<Asn> adversaries, std::vector<PrefixGroup> groups,
                               std::vector<Asn> vp_ases, std::vector<RpkiMode> regimes)
    : adversaries_(sorted_unique<Asn>(adversaries)),
      groups_(std::move(groups)),
      vp_ases_(sorted_unique<Asn>(vp_ases)),
      regimes_(sorted_unique<RpkiMode>(regimes)) {
  std::sort(groups_.begin(), groups_.end(),
            [](const PrefixGroup& a, const PrefixGroup& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < groups_.size(); ++i) {
    if (groups_[i].id == groups_[i - 1].id) {
      throw InputError("duplicate prefix group id " + std::to_string(groups_[i].id));
    }
  }
  bits_.assign((bit_count() + 7) / 8, 0);
}

std::optional<std::size_t> AttackBitStore::adversary_index(Asn asn) const {
  return sorted_index(adversaries_, asn);
}

std::optional<std::size_t> AttackBitStore::group_position(std::uint32_t group_id) const {
  auto it = std::lower_bound(groups_.begin(), groups_.end(), group_id,
                             [](const PrefixGroup& g, std::uint32_t id) { return g.id < id; });
  if (it == groups_.end() || it->id != group_id) return std::nullopt;
  return static_cast<std::size_t>(it - groups_.begin());
}

std::optional<std::size_t> AttackBitStore::vp_index(Asn asn) const { return sorted_index(vp_ases_, asn); }

std::optional<std::size_t> AttackBitStore::regime_index(RpkiMode mode) const {
  return sorted_index(regimes_, mode);
}

void AttackBitStore::set(std::size_t bit) noexcept {
  std::atomic_ref<std::uint8_t> byte(bits_[bit >> 3]);
  byte.fetch_or(static_cast<std::uint8_t>(1U << (bit & 7)), std::memory_order_relaxed);
}

std::optional<bool> AttackBitStore::lookup(Asn adversary, std::uint32_t group_id, Asn vp_as,
                                           RpkiMode regime) const {
  const auto a = adversary_index(adversary);
  const auto g = group_position(group_id);
  const auto v = vp_index(vp_as);
  const auto r = regime_index(regime);
  if (!a || !g || !v || !r) return std::nullopt;
  return get(*a, *g, *v, *r);
}

void AttackBitStore::write(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(adversaries_.size()));
  put_u32(out, static_cast<std::uint32_t>(groups_.size()));
  put_u32(out, static_cast<std::uint32_t>(vp_ases_.size()));
  put_u32(out, static_cast<std::uint32_t>(regimes_.size()));
  for (Asn a : adversaries_) put_u32(out, a);
  for (Asn v : vp_ases_) put_u32(out, v);
  for (RpkiMode r : regimes_) put_u8(out, static_cast<std::uint8_t>(r));
  for (const auto& g : groups_) {
    put_u32(out, g.id);
    put_u8(out, g.roa_covered ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(g.origins.size()));
    for (Asn o : g.origins) put_u32(out, o);
    put_u32(out, static_cast<std::uint32_t>(g.members.size()));
    for (const auto& p : g.members) {
      put_u8(out, static_cast<std::uint8_t>(p.family()));
      put_u8(out, static_cast<std::uint8_t>(p.length()));
      const auto width = p.family() == AddressFamily::v4 ? 4 : 16;
      for (int i = 0; i < width; ++i) put_u8(out, p.network().bytes()[static_cast<std::size_t>(i)]);
    }
  }
  put_u64(out, bit_count());
  out.write(reinterpret_cast<const char*>(bits_.data()), static_cast<std::streamsize>(bits_.size()));
}

AttackBitStore AttackBitStore::read(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw InputError("not an attack bit store (bad magic)");
  }
  const auto n_adv = get_u32(in);
  const auto n_groups = get_u32(in);
  const auto n_vps = get_u32(in);
  const auto n_regimes = get_u32(in);
  std::vector<Asn> adversaries(n_adv), vps(n_vps);
  std::vector<RpkiMode> regimes(n_regimes);
  for (auto& a : adversaries) a = get_u32(in);
  for (auto& v : vps) v = get_u32(in);
  for (auto& r : regimes) {
    const auto raw = get_u8(in);
    if (raw > static_cast<std::uint8_t>(RpkiMode::full)) throw InputError("bit store has unknown regime");
    r = static_cast<RpkiMode>(raw);
  }
  std::vector<PrefixGroup> groups(n_groups);
  for (auto& g : groups) {
    g.id = get_u32(in);
    g.roa_covered = get_u8(in) != 0;
    g.origins.resize(get_u32(in));
    for (auto& o : g.origins) o = get_u32(in);
    g.members.resize(get_u32(in));
    for (auto& p : g.members) {
      const auto family = get_u8(in);
      const auto length = get_u8(in);
      if (family != 4 && family != 6) throw InputError("bit store has unknown address family");
      std::array<std::uint8_t, 16> bytes{};
      for (int i = 0; i < (family == 4 ? 4 : 16); ++i) bytes[static_cast<std::size_t>(i)] = get_u8(in);
      p = Prefix(IpAddress(static_cast<AddressFamily>(family), bytes), length);
    }
  }
  AttackBitStore store(std::move(adversaries), std::move(groups), std::move(vps), std::move(regimes));
  if (get_u64(in) != store.bit_count()) throw InputError("bit store dimensions disagree with bit count");
  if (!in.read(reinterpret_cast<char*>(store.bits_.data()),
               static_cast<std::streamsize>(store.bits_.size()))) {
    throw InputError("bit store truncated");
  }
  return store;
}

void AttackBitStore::write_csv(std::ostream& out) const {
  out << "adversary,group_id,vp_as,regime,bit\n";
  for (std::size_t a = 0; a < adversaries_.size(); ++a) {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      for (std::size_t v = 0; v < vp_ases_.size(); ++v) {
        for (std::size_t r = 0; r < regimes_.size(); ++r) {
          out << adversaries_[a] << ',' << groups_[g].id << ',' << vp_ases_[v] << ','
              << to_string(regimes_[r]) << ',' << (get(a, g, v, r) ? 1 : 0) << '\n';
        }
      }
    }
  }
}

AttackBitStore run_attack_matrix(const AsGraph& graph, std::span<const PrefixGroup> groups,
                                 std::span<const Asn> adversaries, std::span<const Asn> vp_ases,
                                 const RoaSet& roas, std::span<const RpkiMode> modes,
                                 const MatrixOptions& options) {
  if (adversaries.empty()) throw InputError("no adversaries given");
  if (modes.empty()) throw InputError("no RPKI regimes given");
  for (Asn a : adversaries) require_in_graph(graph, a, "adversary");
  for (Asn v : vp_ases) require_in_graph(graph, v, "vantage point");
  for (const auto& g : groups) {
    if (g.members.empty() || g.origins.empty()) {
      throw InputError("prefix group " + std::to_string(g.id) + " is empty");
    }
    require_in_graph(graph, g.legitimate_origin(), "origin");
  }

  AttackBitStore store(std::vector<Asn>(adversaries.begin(), adversaries.end()),
                       std::vector<PrefixGroup>(groups.begin(), groups.end()),
                       std::vector<Asn>(vp_ases.begin(), vp_ases.end()),
                       std::vector<RpkiMode>(modes.begin(), modes.end()));
  const auto& sorted_groups = store.groups();
  const auto& regimes = store.regimes();
  const auto& vps = store.vp_ases();
  std::vector<std::uint32_t> vp_indices;
  for (Asn v : vps) vp_indices.push_back(graph.index_of(v));

  // Groups sharing a legitimate origin route identically; simulate each
  // origin once per adversary.
  struct OriginWork {
    Asn origin;
    std::vector<std::size_t> groups;
    bool needs_plain = false;
    bool needs_prepend = false;
  };
  std::vector<std::vector<std::uint8_t>> rov(sorted_groups.size());
  std::map<Asn, OriginWork> by_origin;
  for (std::size_t g = 0; g < sorted_groups.size(); ++g) {
    auto& work = by_origin[sorted_groups[g].legitimate_origin()];
    work.origin = sorted_groups[g].legitimate_origin();
    work.groups.push_back(g);
    for (auto mode : regimes) {
      const bool effective = rov_effective(mode, roas, sorted_groups[g].members.front());
      rov[g].push_back(effective);
      (effective ? work.needs_prepend : work.needs_plain) = true;
    }
  }
  std::vector<OriginWork> origins;
  for (auto& [asn, work] : by_origin) origins.push_back(std::move(work));

  const auto& advs = store.adversaries();
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(advs.size(), options.workers, [&](std::size_t a) {
    const Asn adversary = advs[a];
    Propagator propagator(graph);
    std::vector<std::uint8_t> plain_bits, prepend_bits;
    for (const auto& work : origins) {
      if (adversary == work.origin) {
        const Announcement benign[] = {Announcement::legitimate(work.origin)};
        propagator.run(benign);
        collect_bits(propagator, vp_indices, 0, plain_bits);
        prepend_bits = plain_bits;
      } else {
        if (work.needs_plain) {
          const Announcement anns[] = {Announcement::legitimate(work.origin),
                                       Announcement::plain_hijack(adversary)};
          propagator.run(anns);
          collect_bits(propagator, vp_indices, 1, plain_bits);
        }
        if (work.needs_prepend) {
          const Announcement anns[] = {Announcement::legitimate(work.origin),
                                       Announcement::prepend_hijack(adversary, work.origin)};
          const RovFilter filter{vps, work.origin};
          propagator.run(anns, &filter);
          collect_bits(propagator, vp_indices, 1, prepend_bits);
        }
      }
      for (auto g : work.groups) {
        for (std::size_t r = 0; r < regimes.size(); ++r) {
          const auto& bits = rov[g][r] ? prepend_bits : plain_bits;
          for (std::size_t v = 0; v < vps.size(); ++v) {
            if (bits[v]) store.set(store.offset(a, g, v, r));
          }
        }
      }
    }
    const auto finished = ++done;
    if (options.progress) {
      std::lock_guard lock(progress_mutex);
      options.progress(finished, advs.size());
    }
  });
  return store;
}

std::vector<Asn> sample_adversaries(const AsGraph& graph, std::size_t n, std::uint64_t seed) {
  if (n > graph.size()) {
    throw InputError("cannot sample " + std::to_string(n) + " adversaries from " +
                     std::to_string(graph.size()) + " ASes");
  }
  std::vector<Asn> pool(graph.nodes().begin(), graph.nodes().end());
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with rejection sampling, so the result depends only
  // on the mt19937_64 output stream and not on library distributions.
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t range = pool.size() - i;
    const std::uint64_t threshold = (0 - range) % range;
    std::uint64_t r;
    do {
      r = rng();
    } while (r < threshold);
    std::swap(pool[i], pool[i + static_cast<std::size_t>(r % range)]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace mvres
