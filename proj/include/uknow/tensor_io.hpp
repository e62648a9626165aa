#pragma once

#include <Eigen/Dense>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include "uknow/error.hpp"

namespace uknow {

// Binary matrix blob, all fields little-endian:
//   magic    8 bytes
//   version  u32 (currently 1)
//   rows     u64
//   dim      u32
//   payload  rows * dim reals, row-major (f32 or f64 depending on magic)
inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 8 + 4 + 8 + 4;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out += static_cast<char>((value >> (8 * i)) & 0xff);
}

template <typename U>
U get_le(std::string_view in, std::size_t at) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    value |= static_cast<U>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return value;
}

template <typename Scalar>
using BitsOf = std::conditional_t<sizeof(Scalar) == 4, std::uint32_t, std::uint64_t>;

}  // namespace detail

template <typename Derived>
std::string encode_tensor(const Eigen::MatrixBase<Derived>& m, std::string_view magic) {
  using Scalar = typename Derived::Scalar;
  static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>);
  if (magic.size() != 8) fail(ErrorKind::invalid_argument, "tensor magic must be 8 bytes");
  std::string out(magic);
  detail::put_le<std::uint32_t>(out, kTensorVersion);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  out.reserve(out.size() + static_cast<std::size_t>(m.size()) * sizeof(Scalar));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      detail::put_le(out, std::bit_cast<detail::BitsOf<Scalar>>(m(r, c)));
  return out;
}

template <typename Scalar>
RowMatrix<Scalar> decode_tensor(std::string_view bytes, std::string_view magic) {
  if (bytes.size() < kTensorHeaderBytes || bytes.substr(0, 8) != magic)
    fail(ErrorKind::corrupt_store, "tensor blob has a bad header");
  if (detail::get_le<std::uint32_t>(bytes, 8) != kTensorVersion)
    fail(ErrorKind::corrupt_store, "unsupported tensor version");
  const auto rows = detail::get_le<std::uint64_t>(bytes, 12);
  const auto dim = detail::get_le<std::uint32_t>(bytes, 20);
  const std::uint64_t expected =
      kTensorHeaderBytes + rows * static_cast<std::uint64_t>(dim) * sizeof(Scalar);
  if (bytes.size() != expected)
    fail(ErrorKind::corrupt_store, "tensor blob size " + std::to_string(bytes.size()) +
                                       " does not match header (" +
                                       std::to_string(expected) + ")");
  RowMatrix<Scalar> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::size_t at = kTensorHeaderBytes;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = std::bit_cast<Scalar>(detail::get_le<detail::BitsOf<Scalar>>(bytes, at));
      at += sizeof(Scalar);
    }
  return m;
}

}  // namespace uknow
