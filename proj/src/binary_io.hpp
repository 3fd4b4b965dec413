#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "ceilkit/error.hpp"
#include "ceilkit/types.hpp"

namespace ceilkit::detail {

// Host byte order. Checkpoints are not meant to move between architectures.
template <typename T>
void write_pod(std::ostream& out, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw DataError("checkpoint truncated or corrupt");
  }
  return value;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, std::uint64_t limit = (1ULL << 32)) {
  const auto n = read_pod<std::uint64_t>(in);
  if (n > limit) throw DataError("checkpoint corrupt: string length out of range");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw DataError("checkpoint truncated or corrupt");
  }
  return s;
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

inline Matrix read_matrix(std::istream& in) {
  const auto rows = read_pod<std::uint64_t>(in);
  const auto cols = read_pod<std::uint64_t>(in);
  if (rows > (1ULL << 28) || cols > (1ULL << 20) || rows * cols > (1ULL << 31)) {
    throw DataError("checkpoint corrupt: matrix shape out of range");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (m.size() > 0 &&
      !in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())))) {
    throw DataError("checkpoint truncated or corrupt");
  }
  return m;
}

inline void write_vector(std::ostream& out, const Vector& v) {
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v.size())));
}

inline Vector read_vector(std::istream& in) {
  const auto n = read_pod<std::uint64_t>(in);
  if (n > (1ULL << 28)) throw DataError("checkpoint corrupt: vector length out of range");
  Vector v(static_cast<Eigen::Index>(n));
  if (n > 0 && !in.read(reinterpret_cast<char*>(v.data()),
                        static_cast<std::streamsize>(sizeof(double) * n))) {
    throw DataError("checkpoint truncated or corrupt");
  }
  return v;
}

}  // namespace ceilkit::detail
