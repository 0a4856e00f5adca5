#pragma once
#include <cstdio>
#include <string>
#include <vector>

#include "c2f/common.hpp"

namespace c2f {

// Little-endian binary file helpers shared by the model container, the
// hierarchy cache and checkpoints. All integers are u64, all reals f64.
class BinWriter {
 public:
  explicit BinWriter(const std::string& path);
  ~BinWriter();
  BinWriter(const BinWriter&) = delete;
  BinWriter& operator=(const BinWriter&) = delete;

  void magic(const char tag[4]);
  void u64v(u64 v);
  void f64v(double v);
  void bytes(const void* p, size_t n);
  void f64s(const std::vector<double>& v);
  void i64s(const std::vector<i64>& v);
  void str(const std::string& s);
  u64 bytes_written() const { return written_; }
  void close();

 private:
  std::FILE* f_ = nullptr;
  std::string path_;
  u64 written_ = 0;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path);
  ~BinReader();
  BinReader(const BinReader&) = delete;
  BinReader& operator=(const BinReader&) = delete;

  void expect_magic(const char tag[4]);
  u64 u64v();
  double f64v();
  void bytes(void* p, size_t n);
  std::vector<double> f64s(u64 n);
  std::vector<i64> i64s(u64 n);
  std::string str();
  bool at_eof();

 private:
  std::FILE* f_ = nullptr;
  std::string path_;
};

}  // namespace c2f
