#include "mvres/live_dns.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <set>
#include <thread>

#include "mvres/error.hpp"

namespace mvres {
namespace dns {
namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> wire) : wire_(wire) {}

  std::uint8_t u8() {
    need(1);
    return wire_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(wire_[pos_] << 8 | wire_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    const std::uint32_t hi = u16();
    return hi << 16 | u16();
  }

  std::string name() {
    std::string out;
    std::size_t at = pos_;
    bool jumped = false;
    int jumps = 0;
    while (true) {
      if (at >= wire_.size()) throw Error("dns", "name runs past the end of the message");
      const std::uint8_t len = wire_[at];
      if ((len & 0xC0) == 0xC0) {
        if (at + 1 >= wire_.size()) throw Error("dns", "truncated compression pointer");
        if (++jumps > 64) throw Error("dns", "compression pointer loop");
        const std::size_t target = static_cast<std::size_t>(len & 0x3F) << 8 | wire_[at + 1];
        if (!jumped) pos_ = at + 2;
        jumped = true;
        at = target;
        continue;
      }
      if (len & 0xC0) throw Error("dns", "unsupported label type");
      if (len == 0) {
        if (!jumped) pos_ = at + 1;
        break;
      }
      if (at + 1 + len > wire_.size()) throw Error("dns", "label runs past the end of the message");
      if (!out.empty()) out += '.';
      for (std::size_t i = 0; i < len; ++i) {
        const char c = static_cast<char>(wire_[at + 1 + i]);
        out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
      }
      if (out.size() > 253) throw Error("dns", "name longer than 253 characters");
      at += 1 + len;
    }
    return out.empty() ? "." : out;
  }

  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > wire_.size()) throw Error("dns", "message truncated");
  }
  std::span<const std::uint8_t> wire_;
  std::size_t pos_ = 0;
};

ResourceRecord read_record(Reader& r, std::span<const std::uint8_t> wire) {
  ResourceRecord rr;
  rr.name = r.name();
  rr.type = r.u16();
  rr.klass = r.u16();
  rr.ttl = r.u32();
  const std::uint16_t length = r.u16();
  const std::size_t start = r.pos();
  if (start + length > wire.size()) throw Error("dns", "record data runs past the end of the message");
  switch (rr.type) {
    case NS:
    case CNAME:
      rr.target = r.name();
      if (r.pos() > start + length) throw Error("dns", "name overruns record data");
      break;
    case A:
    case AAAA: {
      const std::size_t width = rr.type == A ? 4 : 16;
      if (length != width) throw Error("dns", "address record of length " + std::to_string(length));
      std::array<std::uint8_t, 16> bytes{};
      std::copy_n(wire.begin() + static_cast<std::ptrdiff_t>(start), width, bytes.begin());
      rr.address = IpAddress(rr.type == A ? AddressFamily::v4 : AddressFamily::v6, bytes);
      break;
    }
    default:
      break;
  }
  // Position after the record regardless of how much the decoder consumed.
  r.skip(start + length - r.pos());
  return rr;
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

std::vector<std::uint8_t> encode_query(std::uint16_t id, const std::string& name, std::uint16_t type) {
  std::vector<std::uint8_t> out;
  put16(out, id);
  put16(out, 0);  // standard query, RD clear
  put16(out, 1);
  put16(out, 0);
  put16(out, 0);
  put16(out, 1);
  if (name != "." && !name.empty()) {
    std::size_t start = 0;
    while (start <= name.size()) {
      auto dot = name.find('.', start);
      if (dot == std::string::npos) dot = name.size();
      const auto len = dot - start;
      if (len == 0 || len > 63) throw InputError("invalid label in '" + name + "'");
      out.push_back(static_cast<std::uint8_t>(len));
      out.insert(out.end(), name.begin() + static_cast<std::ptrdiff_t>(start),
                 name.begin() + static_cast<std::ptrdiff_t>(dot));
      start = dot + 1;
    }
  }
  out.push_back(0);
  put16(out, type);
  put16(out, 1);
  // OPT: root owner, payload size, extended rcode/version 0, DO bit, no data.
  out.push_back(0);
  put16(out, OPT);
  put16(out, 1232);
  put16(out, 0);
  put16(out, 0x8000);
  put16(out, 0);
  return out;
}

Message decode_message(std::span<const std::uint8_t> wire) {
  Reader r(wire);
  Message m;
  m.id = r.u16();
  const auto flags = r.u16();
  m.response = flags & 0x8000;
  m.authoritative = flags & 0x0400;
  m.truncated = flags & 0x0200;
  m.rcode = static_cast<std::uint8_t>(flags & 0x000F);
  const auto qd = r.u16();
  const auto an = r.u16();
  const auto ns = r.u16();
  const auto ar = r.u16();
  for (int i = 0; i < qd; ++i) {
    r.name();
    r.skip(4);
  }
  for (int i = 0; i < an; ++i) m.answers.push_back(read_record(r, wire));
  for (int i = 0; i < ns; ++i) m.authority.push_back(read_record(r, wire));
  for (int i = 0; i < ar; ++i) m.additional.push_back(read_record(r, wire));
  return m;
}

}  // namespace dns

namespace {

const char* const kRootHints[] = {"198.41.0.4",   "170.247.170.2", "192.33.4.12",  "199.7.91.13",   "192.203.230.10",
                                  "192.5.5.241",  "192.112.36.4",  "198.97.190.53", "192.36.148.17", "192.58.128.30",
                                  "193.0.14.129", "199.7.83.42",   "202.12.27.33"};

std::string parent_of(const std::string& name) {
  const auto dot = name.find('.');
  return dot == std::string::npos ? "." : name.substr(dot + 1);
}

bool at_or_below(const std::string& name, const std::string& zone) {
  if (zone == ".") return true;
  return name == zone || (name.size() > zone.size() && name.ends_with(zone) && name[name.size() - zone.size() - 1] == '.');
}

class Socket {
 public:
  Socket(int family, int type) : fd_(::socket(family, type, 0)) {
    if (fd_ < 0) throw Error("network", std::string("socket: ") + std::strerror(errno));
  }
  ~Socket() { ::close(fd_); }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_;
};

sockaddr_storage to_sockaddr(const IpAddress& ip, socklen_t& len) {
  sockaddr_storage ss{};
  if (ip.family() == AddressFamily::v4) {
    auto* sa = reinterpret_cast<sockaddr_in*>(&ss);
    sa->sin_family = AF_INET;
    sa->sin_port = htons(53);
    std::memcpy(&sa->sin_addr, ip.bytes().data(), 4);
    len = sizeof(sockaddr_in);
  } else {
    auto* sa = reinterpret_cast<sockaddr_in6*>(&ss);
    sa->sin6_family = AF_INET6;
    sa->sin6_port = htons(53);
    std::memcpy(&sa->sin6_addr, ip.bytes().data(), 16);
    len = sizeof(sockaddr_in6);
  }
  return ss;
}

bool wait_for(int fd, short events, std::chrono::milliseconds timeout) {
  pollfd p{fd, events, 0};
  return ::poll(&p, 1, static_cast<int>(timeout.count())) > 0;
}

}  // namespace

LiveZoneOracle::LiveZoneOracle(LiveOptions options) : options_(std::move(options)) {
  if (options_.root_servers.empty()) {
    for (const char* h : kRootHints) options_.root_servers.push_back(*IpAddress::parse(h));
  }
}

void LiveZoneOracle::pace() {
  const auto now = std::chrono::steady_clock::now();
  const auto due = last_query_ + options_.min_interval;
  if (now < due) std::this_thread::sleep_for(due - now);
  last_query_ = std::chrono::steady_clock::now();
}

dns::Message LiveZoneOracle::exchange(const IpAddress& server, const std::string& name, std::uint16_t type) {
  const auto id = next_id_++;
  const auto query = dns::encode_query(id, name, type);
  socklen_t len = 0;
  const auto addr = to_sockaddr(server, len);
  const int family = server.family() == AddressFamily::v4 ? AF_INET : AF_INET6;

  std::optional<dns::Message> reply;
  for (int attempt = 0; attempt <= options_.retries && !reply; ++attempt) {
    pace();
    Socket s(family, SOCK_DGRAM);
    if (::sendto(s.fd(), query.data(), query.size(), 0, reinterpret_cast<const sockaddr*>(&addr), len) < 0) continue;
    const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
    while (!reply) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0 || !wait_for(s.fd(), POLLIN, left)) break;
      std::uint8_t buf[4096];
      const auto n = ::recv(s.fd(), buf, sizeof buf, 0);
      if (n <= 0) break;
      try {
        auto m = dns::decode_message({buf, static_cast<std::size_t>(n)});
        if (m.response && m.id == id) reply = std::move(m);
      } catch (const Error&) {
        // Malformed datagram; keep waiting for the real answer.
      }
    }
  }
  if (!reply) throw Error("network", "no answer from " + server.str() + " for " + name);
  if (!reply->truncated) return *reply;

  pace();
  Socket s(family, SOCK_STREAM);
  timeval tv{static_cast<time_t>(options_.timeout.count() / 1000),
             static_cast<suseconds_t>(options_.timeout.count() % 1000 * 1000)};
  ::setsockopt(s.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(s.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
  if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), len) < 0) {
    throw Error("network", "TCP connect to " + server.str() + " failed");
  }
  std::vector<std::uint8_t> framed{static_cast<std::uint8_t>(query.size() >> 8), static_cast<std::uint8_t>(query.size())};
  framed.insert(framed.end(), query.begin(), query.end());
  if (::send(s.fd(), framed.data(), framed.size(), 0) != static_cast<ssize_t>(framed.size())) {
    throw Error("network", "TCP send to " + server.str() + " failed");
  }
  auto read_exact = [&](std::uint8_t* out, std::size_t n) {
    while (n > 0) {
      const auto got = ::recv(s.fd(), out, n, 0);
      if (got <= 0) throw Error("network", "TCP read from " + server.str() + " failed");
      out += got;
      n -= static_cast<std::size_t>(got);
    }
  };
  std::uint8_t hdr[2];
  read_exact(hdr, 2);
  std::vector<std::uint8_t> body(static_cast<std::size_t>(hdr[0] << 8 | hdr[1]));
  read_exact(body.data(), body.size());
  return dns::decode_message(body);
}

std::optional<dns::Message> LiveZoneOracle::ask(const std::vector<IpAddress>& servers, const std::string& name,
                                                std::uint16_t type) {
  for (const auto& server : servers) {
    try {
      auto m = exchange(server, name, type);
      if (m.rcode == 0 || m.rcode == 3) return m;
    } catch (const Error&) {
      // Try the next server.
    }
  }
  return std::nullopt;
}

std::vector<IpAddress> LiveZoneOracle::addresses_of(const Delegation& d, int depth) {
  std::vector<IpAddress> out;
  for (const auto& ns : d.nameservers) {
    if (auto g = d.glue.find(ns); g != d.glue.end() && !g->second.empty()) {
      out.insert(out.end(), g->second.begin(), g->second.end());
      continue;
    }
    if (depth > 8) continue;
    if (auto c = host_cache_.find(ns); c != host_cache_.end()) {
      out.insert(out.end(), c->second.begin(), c->second.end());
      continue;
    }
    host_cache_[ns] = {};  // breaks cycles while resolving
    std::vector<IpAddress> found;
    std::string current = ns;
    for (int links = 0; links < 8; ++links) {
      const auto servers = servers_for(current, depth + 1);
      const auto m = ask(servers, current, dns::A);
      if (!m) break;
      std::optional<std::string> cname;
      for (const auto& rr : m->answers) {
        if (rr.type == dns::A && rr.address) found.push_back(*rr.address);
        if (rr.type == dns::CNAME && rr.name == current) cname = rr.target;
      }
      if (!found.empty() || !cname) break;
      current = *cname;
    }
    host_cache_[ns] = found;
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

std::vector<IpAddress> LiveZoneOracle::servers_for(const std::string& name, int depth) {
  std::vector<IpAddress> servers = options_.root_servers;
  if (name == ".") return servers;
  std::vector<std::string> chain;
  for (std::string z = name; z != "."; z = parent_of(z)) chain.push_back(z);
  std::reverse(chain.begin(), chain.end());
  for (const auto& zone : chain) {
    std::optional<Delegation> cut;
    if (auto it = cuts_.find(zone); it != cuts_.end()) {
      cut = it->second;
    } else {
      cut = delegation(zone, "");
    }
    if (!cut) continue;
    auto addrs = addresses_of(*cut, depth);
    if (!addrs.empty()) servers = std::move(addrs);
  }
  return servers;
}

std::optional<Delegation> LiveZoneOracle::delegation(const std::string& zone, const std::string&) {
  if (auto it = cuts_.find(zone); it != cuts_.end()) return it->second;
  cuts_[zone] = std::nullopt;  // provisional, stops re-entry
  const auto servers = servers_for(parent_of(zone), 0);
  const auto m = ask(servers, zone, dns::NS);
  if (!m) throw ResolutionError("no nameserver answered for " + zone, {});

  std::optional<Delegation> result;
  std::set<std::string> names;
  bool from_answer = false;
  for (const auto& rr : m->authority) {
    if (rr.type == dns::NS && rr.name == zone) names.insert(rr.target);
  }
  if (names.empty()) {
    for (const auto& rr : m->answers) {
      if (rr.type == dns::NS && rr.name == zone) names.insert(rr.target);
    }
    from_answer = !names.empty();
  }
  if (!names.empty()) {
    Delegation d;
    d.nameservers.assign(names.begin(), names.end());
    for (const auto& rr : m->additional) {
      if ((rr.type == dns::A || rr.type == dns::AAAA) && rr.address && names.count(rr.name) &&
          at_or_below(rr.name, parent_of(zone))) {
        d.glue[rr.name].push_back(*rr.address);
      }
    }
    for (auto& [ns, ips] : d.glue) std::sort(ips.begin(), ips.end());
    for (const auto& rr : m->authority) {
      if (rr.type == dns::DS && rr.name == zone) d.ds_present = true;
    }
    if (from_answer) {
      // The parent's servers also serve the child; ask for DS directly.
      if (const auto ds = ask(servers, zone, dns::DS)) {
        for (const auto& rr : ds->answers) {
          if (rr.type == dns::DS && rr.name == zone) d.ds_present = true;
        }
      }
    }
    result = std::move(d);
  }
  cuts_[zone] = result;
  return result;
}

std::optional<AddressAnswer> LiveZoneOracle::address_records(const std::string& name, const std::string&, int) {
  const auto servers = servers_for(name, 0);
  AddressAnswer out;
  bool exists = false;
  for (const std::uint16_t type : {std::uint16_t{dns::A}, std::uint16_t{dns::AAAA}}) {
    const auto m = ask(servers, name, type);
    if (!m) throw ResolutionError("no nameserver answered for " + name, {});
    if (m->rcode == 3) return std::nullopt;
    exists = true;
    for (const auto& rr : m->answers) {
      if (rr.name != name) continue;
      if (rr.type == dns::CNAME) out.cname = rr.target;
      if (rr.type == dns::A && rr.address) out.a.push_back(*rr.address);
      if (rr.type == dns::AAAA && rr.address) out.aaaa.push_back(*rr.address);
    }
    if (out.cname) {
      out.a.clear();
      out.aaaa.clear();
      break;
    }
  }
  if (!exists) return std::nullopt;
  return out;
}

}  // namespace mvres
