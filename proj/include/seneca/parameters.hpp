#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "seneca/rng.hpp"
#include "seneca/tensor.hpp"

namespace seneca::tensor {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  // Buffers (e.g. update counters) are checkpointed but never optimized.
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
};

using ParamId = std::size_t;

// Owns a model's parameters in insertion order. Models refer to entries by
// ParamId so that copying a store copies the model.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  ParamId add(const std::string& name, Tensor init, bool trainable = true);
  // Xavier-uniform for matrices, zeros for vectors.
  ParamId add_xavier(const std::string& name, Shape shape, Rng& rng);
  ParamId add_uniform(const std::string& name, Shape shape, double bound, Rng& rng);
  ParamId add_zeros(const std::string& name, Shape shape);

  Parameter& at(ParamId id) { return *params_.at(id); }
  const Parameter& at(ParamId id) const { return *params_.at(id); }
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t size() const { return params_.size(); }

  std::vector<Parameter*> trainable();
  void zero_grad();
  double grad_norm() const;
  std::size_t scalar_count() const;

  // Checkpoint archive: u32 version, u32 count, then per parameter
  // u32 name length, name bytes, u32 rank, u64 dims, f64 payload; all
  // little-endian. Names starting with "meta/" load as buffers.
  std::vector<std::uint8_t> serialize() const;
  static ParameterStore deserialize(const std::vector<std::uint8_t>& bytes);
  void save(const std::filesystem::path& path) const;
  static ParameterStore load(const std::filesystem::path& path);

  // Replaces values by name; shapes and names must match exactly.
  void assign_from(const ParameterStore& other);
  std::uint64_t checksum() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, ParamId> index_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace seneca::tensor
