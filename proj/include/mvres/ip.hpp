#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvres {

enum class AddressFamily : std::uint8_t { v4 = 4, v6 = 6 };

/// An IPv4 or IPv6 address. IPv4 addresses occupy the first four bytes.
class IpAddress {
 public:
  IpAddress() = default;
  IpAddress(AddressFamily family, const std::array<std::uint8_t, 16>& bytes);

  static std::optional<IpAddress> parse(std::string_view text);
  static IpAddress v4(std::uint32_t host_order);

  AddressFamily family() const noexcept { return family_; }
  int bit_width() const noexcept { return family_ == AddressFamily::v4 ? 32 : 128; }
  const std::array<std::uint8_t, 16>& bytes() const noexcept { return bytes_; }

  /// Bit `index` counted from the most significant bit.
  bool bit(int index) const noexcept {
    return (bytes_[static_cast<std::size_t>(index >> 3)] >> (7 - (index & 7))) & 1U;
  }

  std::string str() const;

  auto operator<=>(const IpAddress&) const = default;

 private:
  AddressFamily family_ = AddressFamily::v4;
  std::array<std::uint8_t, 16> bytes_{};
};

/// A CIDR block. Always canonical: host bits are zero.
class Prefix {
 public:
  Prefix() = default;
  Prefix(const IpAddress& address, int length);

  /// Accepts "a.b.c.d/n" or "x::y/n"; a bare address is a host prefix.
  /// Host bits are cleared.
  static std::optional<Prefix> parse(std::string_view text);

  const IpAddress& network() const noexcept { return network_; }
  int length() const noexcept { return length_; }
  AddressFamily family() const noexcept { return network_.family(); }

  bool contains(const IpAddress& address) const noexcept;
  /// True when `other` lies inside this block (equal blocks included).
  bool covers(const Prefix& other) const noexcept;

  std::string str() const;

  auto operator<=>(const Prefix&) const = default;

 private:
  IpAddress network_;
  int length_ = 0;
};

/// Binary trie from prefixes to caller-assigned values, one root per
/// address family.
class PrefixTrie {
 public:
  PrefixTrie();

  /// Associates `value` with `prefix`. A prefix holds a single value;
  /// inserting again overwrites it.
  void insert(const Prefix& prefix, std::uint32_t value);

  /// Visits values of all stored prefixes covering the first
  /// `depth` bits of `address`, shortest first.
  void for_each_covering(const IpAddress& address, int depth,
                         const std::function<void(int length, std::uint32_t value)>& visit) const;

  std::optional<std::uint32_t> longest_match(const IpAddress& address) const;

 private:
  struct Node {
    std::array<std::int32_t, 2> child{-1, -1};
    std::int64_t value = -1;
  };
  std::int32_t root(AddressFamily family) const { return family == AddressFamily::v4 ? 0 : 1; }
  std::vector<Node> nodes_;
};

}  // namespace mvres

template <>
struct std::hash<mvres::IpAddress> {
  std::size_t operator()(const mvres::IpAddress& ip) const noexcept {
    std::size_t h = static_cast<std::size_t>(ip.family());
    for (auto b : ip.bytes()) h = h * 131 + b;
    return h;
  }
};
