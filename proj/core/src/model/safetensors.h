#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace promptrank::model {

// Read-only view of a .safetensors file. F32 tensors are served straight
// from the memory mapping; F16/BF16 tensors are widened to float once and
// cached.
class SafeTensors {
 public:
  static SafeTensors Open(const std::filesystem::path& path);

  SafeTensors(SafeTensors&&) noexcept;
  SafeTensors& operator=(SafeTensors&&) noexcept;
  ~SafeTensors();

  bool Has(std::string_view name) const;
  const std::vector<std::int64_t>& Shape(std::string_view name) const;

  // Float32 data of `name`; throws BackendError if absent or if the shape
  // does not match `expected_shape` (when non-empty).
  const float* Floats(std::string_view name, const std::vector<std::int64_t>& expected_shape = {});

  std::vector<std::string> Names() const;

 private:
  struct Entry {
    std::string dtype;
    std::vector<std::int64_t> shape;
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  SafeTensors() = default;
  const Entry& Lookup(std::string_view name) const;

  void* mapping_ = nullptr;
  std::size_t mapping_size_ = 0;
  const std::byte* data_ = nullptr;
  std::size_t data_size_ = 0;
  std::string path_;
  std::map<std::string, Entry, std::less<>> entries_;
  std::map<std::string, std::vector<float>, std::less<>> widened_;
};

}  // namespace promptrank::model
