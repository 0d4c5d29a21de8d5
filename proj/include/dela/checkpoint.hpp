#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dela/tensor.hpp"

namespace dela::checkpoint {

// On-disk layout, little-endian throughout:
//   magic "DELA" | u32 version | u64 step
//   u64 config_len | config text (key=value lines)
//   u64 rng_len | rng state text
//   u64 n_records, then per record:
//     u32 name_len | name | u8 dtype (4 or 8 bytes/elem)
//     u64 rows | u64 cols | row-major payload
inline constexpr std::uint32_t kVersion = 1;

template <class S>
struct Snapshot {
  std::string config_text;
  std::string rng_state;
  std::uint64_t step = 0;
  std::vector<std::pair<std::string, tensor::Mat<S>>> tensors;

  const tensor::Mat<S>& find(const std::string& name) const {
    for (const auto& [n, m] : tensors)
      if (n == name) return m;
    throw std::runtime_error("checkpoint: missing tensor " + name);
  }
  bool has(const std::string& name) const {
    for (const auto& [n, m] : tensors)
      if (n == name) return true;
    return false;
  }
};

namespace detail {

template <class T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

inline void write_str(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str(std::istream& is) {
  auto n = read_pod<std::uint64_t>(is);
  if (n > (1ull << 32)) throw std::runtime_error("checkpoint: corrupt length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

}  // namespace detail

template <class S>
void save_checkpoint(const std::string& path, const Snapshot<S>& snap) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp);
    os.write("DELA", 4);
    detail::write_pod<std::uint32_t>(os, kVersion);
    detail::write_pod<std::uint64_t>(os, snap.step);
    detail::write_str(os, snap.config_text);
    detail::write_str(os, snap.rng_state);
    detail::write_pod<std::uint64_t>(os, snap.tensors.size());
    for (const auto& [name, m] : snap.tensors) {
      detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      detail::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(sizeof(S)));
      detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
      detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          S v = m(i, j);
          os.write(reinterpret_cast<const char*>(&v), sizeof(S));
        }
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("checkpoint: rename to " + path + " failed");
}

template <class S>
Snapshot<S> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "DELA")
    throw std::runtime_error("checkpoint: bad magic in " + path);
  auto version = detail::read_pod<std::uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  Snapshot<S> snap;
  snap.step = detail::read_pod<std::uint64_t>(is);
  snap.config_text = detail::read_str(is);
  snap.rng_state = detail::read_str(is);
  auto n = detail::read_pod<std::uint64_t>(is);
  snap.tensors.reserve(n);
  for (std::uint64_t r = 0; r < n; ++r) {
    auto name_len = detail::read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    auto dtype = detail::read_pod<std::uint8_t>(is);
    if (dtype != sizeof(S))
      throw std::runtime_error("checkpoint: precision mismatch for " + name);
    auto rows = detail::read_pod<std::uint64_t>(is);
    auto cols = detail::read_pod<std::uint64_t>(is);
    tensor::Mat<S> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = detail::read_pod<S>(is);
    snap.tensors.emplace_back(std::move(name), std::move(m));
  }
  return snap;
}

}  // namespace dela::checkpoint
