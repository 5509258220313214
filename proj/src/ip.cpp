#include "mvres/ip.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>
#include <cstring>

namespace mvres {

IpAddress::IpAddress(AddressFamily family, const std::array<std::uint8_t, 16>& bytes)
    : family_(family), bytes_(bytes) {
  if (family_ == AddressFamily::v4) std::fill(bytes_.begin() + 4, bytes_.end(), 0);
}

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
  if (text.empty() || text.size() > INET6_ADDRSTRLEN) return std::nullopt;
  std::string buffer(text);
  std::array<std::uint8_t, 16> bytes{};
  if (buffer.find(':') == std::string::npos) {
    in_addr v4{};
    if (inet_pton(AF_INET, buffer.c_str(), &v4) != 1) return std::nullopt;
    std::memcpy(bytes.data(), &v4, 4);
    return IpAddress(AddressFamily::v4, bytes);
  }
  in6_addr v6{};
  if (inet_pton(AF_INET6, buffer.c_str(), &v6) != 1) return std::nullopt;
  std::memcpy(bytes.data(), &v6, 16);
  return IpAddress(AddressFamily::v6, bytes);
}

IpAddress IpAddress::v4(std::uint32_t host_order) {
  std::array<std::uint8_t, 16> bytes{};
  bytes[0] = static_cast<std::uint8_t>(host_order >> 24);
  bytes[1] = static_cast<std::uint8_t>(host_order >> 16);
  bytes[2] = static_cast<std::uint8_t>(host_order >> 8);
  bytes[3] = static_cast<std::uint8_t>(host_order);
  return IpAddress(AddressFamily::v4, bytes);
}

std::string IpAddress::str() const {
  char out[INET6_ADDRSTRLEN] = {};
  if (family_ == AddressFamily::v4) {
    inet_ntop(AF_INET, bytes_.data(), out, sizeof out);
  } else {
    inet_ntop(AF_INET6, bytes_.data(), out, sizeof out);
  }
  return out;
}

Prefix::Prefix(const IpAddress& address, int length) : length_(length) {
  auto bytes = address.bytes();
  for (int i = 0; i < 16; ++i) {
    const int keep = std::clamp(length - i * 8, 0, 8);
    bytes[static_cast<std::size_t>(i)] &= static_cast<std::uint8_t>(0xFF00U >> keep);
  }
  network_ = IpAddress(address.family(), bytes);
}

std::optional<Prefix> Prefix::parse(std::string_view text) {
  const auto slash = text.find('/');
  auto address = IpAddress::parse(text.substr(0, slash));
  if (!address) return std::nullopt;
  int length = address->bit_width();
  if (slash != std::string_view::npos) {
    auto digits = text.substr(slash + 1);
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), length);
    if (ec != std::errc{} || end != digits.data() + digits.size() || digits.empty()) return std::nullopt;
    if (length < 0 || length > address->bit_width()) return std::nullopt;
  }
  return Prefix(*address, length);
}

bool Prefix::contains(const IpAddress& address) const noexcept {
  if (address.family() != family()) return false;
  return Prefix(address, length_).network_ == network_;
}

bool Prefix::covers(const Prefix& other) const noexcept {
  return other.length_ >= length_ && contains(other.network_);
}

std::string Prefix::str() const { return network_.str() + "/" + std::to_string(length_); }

PrefixTrie::PrefixTrie() : nodes_(2) {}

void PrefixTrie::insert(const Prefix& prefix, std::uint32_t value) {
  std::int32_t node = root(prefix.family());
  for (int i = 0; i < prefix.length(); ++i) {
    const int b = prefix.network().bit(i);
    auto next = nodes_[static_cast<std::size_t>(node)].child[static_cast<std::size_t>(b)];
    if (next < 0) {
      next = static_cast<std::int32_t>(nodes_.size());
      nodes_.emplace_back();
      nodes_[static_cast<std::size_t>(node)].child[static_cast<std::size_t>(b)] = next;
    }
    node = next;
  }
  nodes_[static_cast<std::size_t>(node)].value = value;
}

void PrefixTrie::for_each_covering(
    const IpAddress& address, int depth,
    const std::function<void(int length, std::uint32_t value)>& visit) const {
  std::int32_t node = root(address.family());
  for (int i = 0;; ++i) {
    const auto& n = nodes_[static_cast<std::size_t>(node)];
    if (n.value >= 0) visit(i, static_cast<std::uint32_t>(n.value));
    if (i == depth) break;
    node = n.child[static_cast<std::size_t>(address.bit(i))];
    if (node < 0) break;
  }
}

std::optional<std::uint32_t> PrefixTrie::longest_match(const IpAddress& address) const {
  std::optional<std::uint32_t> best;
  for_each_covering(address, address.bit_width(),
                    [&](int, std::uint32_t value) { best = value; });
  return best;
}

}  // namespace mvres
