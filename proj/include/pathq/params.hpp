/*
 * Copyright 2026 The pathq Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PATHQ_PARAMS_HPP_
#define PATHQ_PARAMS_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "pathq/error.hpp"
#include "pathq/tensor.hpp"

namespace pathq {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  // Adam moments.
  Tensor<T> m;
  Tensor<T> v;
};

// Named trainable arrays in registration order. Parameter addresses stay
// valid for the life of the store.
template <typename T>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other) { *this = other; }
  ParameterStore& operator=(const ParameterStore& other) {
    if (this == &other) return *this;
    params_.clear();
    index_.clear();
    for (const auto& p : other.params_) {
      params_.push_back(std::make_unique<Parameter<T>>(*p));
      index_[p->name] = params_.size() - 1;
    }
    step_ = other.step_;
    return *this;
  }
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  Parameter<T>& add(const std::string& name, std::vector<std::size_t> shape) {
    if (index_.count(name)) {
      throw ShapeError("duplicate parameter name '" + name + "'");
    }
    auto p = std::make_unique<Parameter<T>>();
    p->name = name;
    p->value = Tensor<T>(shape);
    p->grad = Tensor<T>(shape);
    p->m = Tensor<T>(shape);
    p->v = Tensor<T>(std::move(shape));
    params_.push_back(std::move(p));
    index_[name] = params_.size() - 1;
    return *params_.back();
  }

  Parameter<T>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ShapeError("no parameter '" + name + "'");
    return *params_[it->second];
  }
  const Parameter<T>& get(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->get(name);
  }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return params_.size(); }
  Parameter<T>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.fill(T(0));
  }

  // Number of optimizer updates applied so far.
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

// Copies values, moments and step count between stores with identical
// layouts (e.g. to restore a best-so-far snapshot into a live model).
template <typename T>
void copy_state(const ParameterStore<T>& src, ParameterStore<T>& dst) {
  if (src.size() != dst.size()) throw ShapeError("parameter stores differ in layout");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].name != dst[i].name || !src[i].value.same_shape(dst[i].value)) {
      throw ShapeError("parameter stores differ at '" + src[i].name + "'");
    }
    dst[i].value = src[i].value;
    dst[i].grad = src[i].grad;
    dst[i].m = src[i].m;
    dst[i].v = src[i].v;
  }
  dst.set_step(src.step());
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter, then zeroes the
// gradients. A NaN/Inf gradient aborts before anything is modified.
template <typename T>
void adam_step(ParameterStore<T>& store, const AdamConfig& cfg) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!store[i].grad.all_finite()) {
      throw NumericError("non-finite gradient in parameter '" + store[i].name +
                         "'");
    }
  }
  store.set_step(store.step() + 1);
  const double t = static_cast<double>(store.step());
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const T g = p.grad[k];
      p.m[k] = b1 * p.m[k] + (T(1) - b1) * g;
      p.v[k] = b2 * p.v[k] + (T(1) - b2) * g * g;
      const double m_hat = static_cast<double>(p.m[k]) / c1;
      const double v_hat = static_cast<double>(p.v[k]) / c2;
      p.value[k] -= static_cast<T>(cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
  }
  store.zero_grad();
}

template <typename T, typename Rng>
void init_uniform(Tensor<T>& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

// ---------------------------------------------------------------------------
// Checkpoint container
//
//   "PFCK" | u32 version | u64 meta length | meta JSON bytes |
//   repeated { u64 name length | name | u64 rank | rank x u64 dims |
//              prod(dims) x f32 }
//
// All integers and floats little-endian. Adam moments are stored as
// "opt/m/<name>" and "opt/v/<name>".

inline constexpr char kCheckpointMagic[4] = {'P', 'F', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::uint64_t u(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError(source_ + ": truncated checkpoint");
  }
  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace detail

struct CheckpointRecord {
  std::vector<std::size_t> dims;
  std::vector<float> values;
};

struct Checkpoint {
  nlohmann::json meta;
  std::map<std::string, CheckpointRecord> records;
  // Names in file order.
  std::vector<std::string> order;
};

template <typename T>
std::string encode_checkpoint(const ParameterStore<T>& store,
                              const nlohmann::json& meta,
                              bool include_optimizer = true) {
  std::string out(kCheckpointMagic, 4);
  detail::put_u32(out, kCheckpointVersion);
  const std::string meta_bytes = meta.dump();
  detail::put_u64(out, meta_bytes.size());
  out += meta_bytes;
  auto record = [&](const std::string& name, const Tensor<T>& t) {
    detail::put_u64(out, name.size());
    out += name;
    detail::put_u64(out, t.rank());
    for (auto d : t.shape()) detail::put_u64(out, d);
    for (T v : t.values()) {
      detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  };
  for (std::size_t i = 0; i < store.size(); ++i) record(store[i].name, store[i].value);
  if (include_optimizer) {
    for (std::size_t i = 0; i < store.size(); ++i) {
      record("opt/m/" + store[i].name, store[i].m);
      record("opt/v/" + store[i].name, store[i].v);
    }
  }
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes,
                                    const std::string& source) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw DataError(source + ": not a PFCK checkpoint");
  }
  detail::ByteReader r(bytes, source);
  r.str(4);
  const auto version = static_cast<std::uint32_t>(r.u(4));
  if (version != kCheckpointVersion) {
    throw DataError(source + ": unsupported checkpoint version " +
                    std::to_string(version));
  }
  Checkpoint ck;
  const auto meta_len = r.u(8);
  try {
    ck.meta = nlohmann::json::parse(r.str(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(source + ": bad metadata: " + e.what());
  }
  while (!r.done()) {
    const auto name = r.str(r.u(8));
    CheckpointRecord rec;
    const auto rank = r.u(8);
    if (rank == 0 || rank > 3) throw DataError(source + ": bad rank for " + name);
    std::size_t n = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      rec.dims.push_back(r.u(8));
      n *= rec.dims.back();
    }
    rec.values.resize(n);
    for (auto& v : rec.values) v = std::bit_cast<float>(static_cast<std::uint32_t>(r.u(4)));
    ck.order.push_back(name);
    ck.records.emplace(name, std::move(rec));
  }
  return ck;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const ParameterStore<T>& store, const nlohmann::json& meta,
                     bool include_optimizer = true) {
  const auto bytes = encode_checkpoint(store, meta, include_optimizer);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path.string());
}

// Copies checkpoint values into a store whose layout was already built.
// Missing optimizer records leave the moments at zero.
template <typename T>
void restore_parameters(const Checkpoint& ck, ParameterStore<T>& store) {
  auto copy = [&](const std::string& name, Tensor<T>& dst, bool required) {
    auto it = ck.records.find(name);
    if (it == ck.records.end()) {
      if (required) throw DataError("checkpoint lacks parameter '" + name + "'");
      return;
    }
    if (it->second.dims != dst.shape()) {
      throw DataError("checkpoint shape mismatch for '" + name + "'");
    }
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(it->second.values[k]);
  };
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    copy(p.name, p.value, true);
    copy("opt/m/" + p.name, p.m, false);
    copy("opt/v/" + p.name, p.v, false);
  }
  if (ck.meta.contains("optimizer_step")) {
    store.set_step(ck.meta.at("optimizer_step").get<std::int64_t>());
  }
}

}  // namespace pathq

#endif  // PATHQ_PARAMS_HPP_
