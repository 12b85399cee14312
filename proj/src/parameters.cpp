#include "seneca/parameters.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace seneca::tensor {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

  std::uint64_t uint(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += width;
    return v;
  }

  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated archive");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
  auto* p = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

ParameterStore::ParameterStore(const ParameterStore& other) : index_(other.index_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this != &other) {
    ParameterStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

ParamId ParameterStore::add(const std::string& name, Tensor init, bool trainable) {
  if (index_.count(name)) throw std::invalid_argument("parameter '" + name + "' already exists");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Tensor::zeros_like(init);
  p->value = std::move(init);
  p->trainable = trainable;
  params_.push_back(std::move(p));
  index_[name] = params_.size() - 1;
  return params_.size() - 1;
}

ParamId ParameterStore::add_xavier(const std::string& name, Shape shape, Rng& rng) {
  if (shape.size() < 2) return add_zeros(name, std::move(shape));
  double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  return add_uniform(name, std::move(shape), bound, rng);
}

ParamId ParameterStore::add_uniform(const std::string& name, Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& x : t.data()) x = rng.uniform(-bound, bound);
  return add(name, std::move(t));
}

ParamId ParameterStore::add_zeros(const std::string& name, Shape shape) { return add(name, Tensor(std::move(shape))); }

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->get(name);
}

std::vector<Parameter*> ParameterStore::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_)
    if (p->trainable) out.push_back(p.get());
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

double ParameterStore::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_)
    if (p->trainable) s += p->grad.squared_norm();
  return std::sqrt(s);
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

std::vector<std::uint8_t> ParameterStore::serialize() const {
  std::vector<std::uint8_t> out;
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.insert(out.end(), p->name.begin(), p->name.end());
    const auto& shape = p->value.shape();
    put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put_u64(out, d);
    for (double x : p->value.data()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  return out;
}

ParameterStore ParameterStore::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  auto version = in.uint(4);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  }
  auto count = in.uint(4);
  ParameterStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto name = in.text(in.uint(4));
    auto rank = in.uint(4);
    Shape shape;
    for (std::uint64_t r = 0; r < rank; ++r) shape.push_back(in.uint(8));
    std::vector<double> data(shape_size(shape));
    for (auto& x : data) x = std::bit_cast<double>(in.uint(8));
    bool buffer = name.rfind("meta/", 0) == 0;
    store.add(name, Tensor(std::move(shape), std::move(data)), !buffer);
  }
  if (!in.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return store;
}

void ParameterStore::save(const std::filesystem::path& path) const {
  auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ParameterStore ParameterStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void ParameterStore::assign_from(const ParameterStore& other) {
  if (other.size() != size()) {
    throw std::runtime_error("checkpoint: expected " + std::to_string(size()) + " parameters, got " +
                             std::to_string(other.size()));
  }
  for (auto& p : params_) {
    const auto& src = other.get(p->name);
    if (src.value.shape() != p->value.shape()) {
      throw std::runtime_error("checkpoint: parameter '" + p->name + "' has shape " +
                               shape_string(src.value.shape()) + ", expected " + shape_string(p->value.shape()));
    }
    p->value = src.value;
  }
}

std::uint64_t ParameterStore::checksum() const {
  auto bytes = serialize();
  return fnv1a(bytes.data(), bytes.size());
}

}  // namespace seneca::tensor
