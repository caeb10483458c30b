#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "replaydet/error.hpp"

// Little-endian primitives for the cache and model file formats.
namespace replaydet::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void write_f64_array(std::ostream& out, const double* data,
                            std::size_t n) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(n * sizeof(double)));
}

inline void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  write_f64_array(out, v.data(), static_cast<std::size_t>(v.size()));
}

// Row-major with a rows/cols prefix.
inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      rm = m;
  write_f64_array(out, rm.data(), static_cast<std::size_t>(rm.size()));
}

class Reader {
 public:
  Reader(std::istream& in, ErrorCode on_error)
      : in_(in), on_error_(on_error) {}

  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      fail(on_error_, "unexpected end of file");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string string(std::size_t max_len = 1u << 24) {
    const std::uint32_t n = u32();
    if (n > max_len) fail(on_error_, "string length out of range");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  Eigen::VectorXd vector() {
    const std::uint32_t n = u32();
    check_count(n);
    Eigen::VectorXd v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
  }
  Eigen::MatrixXd matrix() {
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    check_count(static_cast<std::uint64_t>(rows) * cols);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
        rows, cols);
    bytes(rm.data(), static_cast<std::size_t>(rm.size()) * sizeof(double));
    return rm;
  }
  void expect_magic(const char (&magic)[5]) {
    char got[4];
    bytes(got, 4);
    if (std::memcmp(got, magic, 4) != 0)
      fail(on_error_, std::string("bad magic, expected ") + magic);
  }
  [[noreturn]] void corrupt(const std::string& what) { fail(on_error_, what); }

 private:
  void check_count(std::uint64_t n) {
    if (n > (1ull << 31)) fail(on_error_, "element count out of range");
  }

  std::istream& in_;
  ErrorCode on_error_;
};

}  // namespace replaydet::binary
