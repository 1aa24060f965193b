#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace hsgs::binio {

inline std::uint64_t to_le(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(x);
  return x;
}

inline void put_u64(std::ostream& os, std::uint64_t x) {
  x = to_le(x);
  os.write(reinterpret_cast<const char*>(&x), 8);
}
inline void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

inline bool get_u64(std::istream& is, std::uint64_t& x) {
  if (!is.read(reinterpret_cast<char*>(&x), 8)) return false;
  x = to_le(x);
  return true;
}
inline bool get_f64(std::istream& is, double& d) {
  std::uint64_t x;
  if (!get_u64(is, x)) return false;
  d = std::bit_cast<double>(x);
  return true;
}

inline void put_magic(std::ostream& os, std::string_view m) { os.write(m.data(), static_cast<std::streamsize>(m.size())); }
inline bool check_magic(std::istream& is, std::string_view m) {
  std::string buf(m.size(), '\0');
  return static_cast<bool>(is.read(buf.data(), static_cast<std::streamsize>(m.size()))) && buf == m;
}

/// FNV-1a 64-bit.
class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= c[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t x) {
    x = to_le(x);
    bytes(&x, 8);
  }
  void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace hsgs::binio
