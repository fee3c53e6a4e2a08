// Copyright 2026  The tlab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tlab/checkpoint.h"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tlab {

namespace {

constexpr char kMagic[8] = {'T', 'L', 'A', 'B', 'B', 'I', 'N', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() {
    const uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }

  std::string str() {
    const uint32_t len = u32();
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  void expect_magic() {
    need(8);
    if (std::memcmp(bytes_.data(), kMagic, 8) != 0) {
      throw std::runtime_error(path_ + ": not a tlab container (bad magic)");
    }
    pos_ = 8;
  }

  bool done() const { return pos_ == bytes_.size(); }
  const std::string& path() const { return path_; }

 private:
  void need(size_t n) {
    if (pos_ + n > bytes_.size()) throw std::runtime_error(path_ + ": truncated container");
  }
  std::string bytes_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

const Tensor* Container::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

const std::string& Container::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw std::runtime_error("container: missing metadata key '" + key + "'");
  return it->second;
}

void write_container(const std::string& path, const Container& c) {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  put_u32(out, static_cast<uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    put_string(out, name);
    put_u32(out, static_cast<uint32_t>(t.ndim()));
    for (int64_t d : t.shape()) put_u64(out, static_cast<uint64_t>(d));
    for (int64_t i = 0; i < t.numel(); ++i) put_f64(out, t.at(i));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_container: cannot open '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_container: short write to '" + path + "'");
}

Container read_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_container: cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path);
  r.expect_magic();
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error(path + ": unsupported container version " + std::to_string(version));
  }
  Container c;
  const uint32_t n_meta = r.u32();
  for (uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    std::string v = r.str();
    c.metadata.emplace(std::move(k), std::move(v));
  }
  const uint32_t n_tensors = r.u32();
  c.tensors.reserve(n_tensors);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const uint32_t ndim = r.u32();
    std::vector<int64_t> shape(ndim);
    int64_t numel = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      shape[d] = static_cast<int64_t>(r.u64());
      numel *= shape[d];
    }
    std::vector<double> data(static_cast<size_t>(numel));
    for (int64_t j = 0; j < numel; ++j) data[static_cast<size_t>(j)] = r.f64();
    c.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw std::runtime_error(path + ": trailing bytes after container payload");
  return c;
}

}  // namespace tlab
