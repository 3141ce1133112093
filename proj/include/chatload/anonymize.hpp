#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <unordered_map>

#include "chatload/types.hpp"

namespace chatload {
namespace detail {

inline std::uint64_t rotl64(std::uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }

// SipHash-2-4 (Aumasson & Bernstein), the usual keyed 64-bit PRF.
inline std::uint64_t siphash24(std::uint64_t k0, std::uint64_t k1, std::string_view data) {
  std::uint64_t v0 = 0x736f6d6570736575ULL ^ k0;
  std::uint64_t v1 = 0x646f72616e646f6dULL ^ k1;
  std::uint64_t v2 = 0x6c7967656e657261ULL ^ k0;
  std::uint64_t v3 = 0x7465646279746573ULL ^ k1;

  auto sipround = [&]() {
    v0 += v1; v1 = rotl64(v1, 13); v1 ^= v0; v0 = rotl64(v0, 32);
    v2 += v3; v3 = rotl64(v3, 16); v3 ^= v2;
    v0 += v3; v3 = rotl64(v3, 21); v3 ^= v0;
    v2 += v1; v1 = rotl64(v1, 17); v1 ^= v2; v2 = rotl64(v2, 32);
  };

  const std::size_t n = data.size();
  const std::size_t end = n - n % 8;
  for (std::size_t i = 0; i < end; i += 8) {
    std::uint64_t m = 0;
    std::memcpy(&m, data.data() + i, 8);
    v3 ^= m;
    sipround();
    sipround();
    v0 ^= m;
  }
  std::uint64_t last = static_cast<std::uint64_t>(n & 0xFF) << 56;
  for (std::size_t i = end; i < n; ++i) {
    last |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[i])) << (8 * (i - end));
  }
  v3 ^= last;
  sipround();
  sipround();
  v0 ^= last;
  v2 ^= 0xFF;
  sipround();
  sipround();
  sipround();
  sipround();
  return v0 ^ v1 ^ v2 ^ v3;
}

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Keyed one-way pseudonym for a raw identity: "u" + 16 hex digits of a
/// SipHash-2-4 digest whose key is derived from the salt.
inline std::string pseudonym(std::string_view raw_id, std::string_view salt) {
  const std::uint64_t k0 = detail::fnv1a64(salt, 0xcbf29ce484222325ULL);
  const std::uint64_t k1 = detail::fnv1a64(salt, 0x84222325cbf29ce4ULL);
  const std::uint64_t h = detail::siphash24(k0, k1, raw_id);
  static const char* hex = "0123456789abcdef";
  std::string out = "u";
  for (int shift = 60; shift >= 0; shift -= 4) out += hex[(h >> shift) & 0xF];
  return out;
}

/// Replaces every user id by its keyed digest. Identical raw identities map
/// to identical pseudonyms; ordering and timestamps are untouched.
inline MessageLog anonymize(const MessageLog& log, std::string_view salt) {
  MessageLog out = log;
  std::unordered_map<std::string, std::string> cache;
  for (Message& m : out.messages) {
    auto it = cache.find(m.user_id);
    if (it == cache.end()) {
      it = cache.emplace(m.user_id, pseudonym(m.user_id, salt)).first;
    }
    m.user_id = it->second;
  }
  return out;
}

/// Roster identities get the same mapping so passive-user counting still
/// lines up with an anonymized log.
inline Roster anonymize(const Roster& roster, std::string_view salt) {
  Roster out;
  out.group_id = roster.group_id;
  out.category = roster.category;
  for (const auto& m : roster.members) out.members.insert(pseudonym(m, salt));
  for (const auto& a : roster.admins) out.admins.insert(pseudonym(a, salt));
  return out;
}

}  // namespace chatload
