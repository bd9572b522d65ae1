#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gridshield/common.hpp"
#include "gridshield/grid.hpp"
#include "gridshield/transform.hpp"

namespace gridshield::detail {

// Little-endian binary encoding helpers shared by the shield, tree and
// Q-table files.

template <typename T>
T byte_swap(T v) {
  char* p = reinterpret_cast<char*>(&v);
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
  return v;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw io_error("cannot open '" + path.string() + "' for writing");
  }

  void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { bytes(reinterpret_cast<const char*>(&v), 1); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put(bits);
  }
  void finish() {
    out_.flush();
    if (!out_) throw io_error("write failed for '" + path_.string() + "'");
  }

 private:
  template <typename T>
  void put(T v) {
    static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big);
    if constexpr (std::endian::native == std::endian::big) v = byte_swap(v);
    bytes(reinterpret_cast<const char*>(&v), sizeof v);
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : in_(path, std::ios::binary) {
    if (!in_) throw io_error("cannot open '" + path.string() + "'");
  }

  void bytes(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw io_error("corrupt file: unexpected end of file");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(reinterpret_cast<char*>(&v), 1);
    return v;
  }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() {
    const std::uint64_t bits = get<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  void expect_eof(const std::string& message) {
    char c;
    in_.read(&c, 1);
    if (!in_.eof()) throw io_error(message);
  }

 private:
  template <typename T>
  T get() {
    T v;
    bytes(reinterpret_cast<char*>(&v), sizeof v);
    if constexpr (std::endian::native == std::endian::big) v = byte_swap(v);
    return v;
  }

  std::ifstream in_;
};

struct Header {
  std::uint32_t version = 0;
  GridSpec grid;
  std::vector<std::string> actions;
  Transform transform;
};

void write_header(Writer& w, const char magic[4], const GridSpec& grid,
                  const std::vector<std::string>& actions, const Transform& tr);
Header read_header(Reader& r, const char magic[4]);

}  // namespace gridshield::detail
