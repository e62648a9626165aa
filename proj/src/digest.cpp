#include "uknow/digest.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <vector>

#include "uknow/corpus.hpp"
#include "uknow/error.hpp"

namespace uknow {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
         md.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * md.size());
  for (unsigned char b : md) {
    out += kHex[b >> 4];
    out += kHex[b & 0xf];
  }
  return out;
}

std::string digest_path(const fs::path& path) {
  if (fs::is_regular_file(path)) return sha256_hex(read_file(path));
  if (!fs::is_directory(path)) fail(ErrorKind::io, "no such input: " + path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path))
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), path));
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& rel : files) {
    acc += rel.generic_string();
    acc += '\0';
    acc += sha256_hex(read_file(path / rel));
    acc += '\n';
  }
  return sha256_hex(acc);
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "write failure on " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace uknow
