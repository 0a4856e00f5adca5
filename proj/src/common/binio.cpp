#include "c2f/binio.hpp"

#include <bit>
#include <cstring>

namespace c2f {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

BinWriter::BinWriter(const std::string& path) : path_(path) {
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) throw IoError("cannot open for writing: " + path);
}

BinWriter::~BinWriter() {
  if (f_) std::fclose(f_);
}

void BinWriter::close() {
  if (f_) {
    if (std::fclose(f_) != 0) throw IoError("close failed: " + path_);
    f_ = nullptr;
  }
}

void BinWriter::bytes(const void* p, size_t n) {
  if (std::fwrite(p, 1, n, f_) != n) throw IoError("short write: " + path_);
  written_ += n;
}

void BinWriter::magic(const char tag[4]) { bytes(tag, 4); }
void BinWriter::u64v(u64 v) { bytes(&v, 8); }
void BinWriter::f64v(double v) { bytes(&v, 8); }

void BinWriter::f64s(const std::vector<double>& v) {
  u64v(v.size());
  if (!v.empty()) bytes(v.data(), v.size() * 8);
}

void BinWriter::i64s(const std::vector<i64>& v) {
  u64v(v.size());
  if (!v.empty()) bytes(v.data(), v.size() * 8);
}

void BinWriter::str(const std::string& s) {
  u64v(s.size());
  if (!s.empty()) bytes(s.data(), s.size());
}

BinReader::BinReader(const std::string& path) : path_(path) {
  f_ = std::fopen(path.c_str(), "rb");
  if (!f_) throw IoError("cannot open for reading: " + path);
}

BinReader::~BinReader() {
  if (f_) std::fclose(f_);
}

void BinReader::bytes(void* p, size_t n) {
  if (std::fread(p, 1, n, f_) != n)
    throw IoError("truncated or unreadable file: " + path_);
}

void BinReader::expect_magic(const char tag[4]) {
  char got[4];
  bytes(got, 4);
  if (std::memcmp(got, tag, 4) != 0)
    throw IoError("bad magic in " + path_ + " (expected " +
                  std::string(tag, 4) + ")");
}

u64 BinReader::u64v() {
  u64 v;
  bytes(&v, 8);
  return v;
}

double BinReader::f64v() {
  double v;
  bytes(&v, 8);
  return v;
}

std::vector<double> BinReader::f64s(u64 n) {
  const u64 stored = u64v();
  if (stored != n)
    throw IoError("array length mismatch in " + path_ + ": expected " +
                  std::to_string(n) + ", file has " + std::to_string(stored));
  std::vector<double> v(stored);
  if (stored) bytes(v.data(), stored * 8);
  return v;
}

std::vector<i64> BinReader::i64s(u64 n) {
  const u64 stored = u64v();
  if (stored != n)
    throw IoError("array length mismatch in " + path_ + ": expected " +
                  std::to_string(n) + ", file has " + std::to_string(stored));
  std::vector<i64> v(stored);
  if (stored) bytes(v.data(), stored * 8);
  return v;
}

std::string BinReader::str() {
  const u64 n = u64v();
  if (n > (1ULL << 32)) throw IoError("unreasonable string length in " + path_);
  std::string s(n, '\0');
  if (n) bytes(s.data(), n);
  return s;
}

bool BinReader::at_eof() {
  const int c = std::fgetc(f_);
  if (c == EOF) return true;
  std::ungetc(c, f_);
  return false;
}

}  // namespace c2f
