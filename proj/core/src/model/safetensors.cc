#include "model/safetensors.h"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <utility>

#include <nlohmann/json.hpp>

#include "promptrank/errors.h"

namespace promptrank::model {
namespace {

float HalfToFloat(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000) << 16;
  std::uint32_t exp = (h >> 10) & 0x1F;
  std::uint32_t mant = h & 0x3FF;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      exp = 127 - 15 + 1;
      while ((mant & 0x400) == 0) {
        mant <<= 1;
        --exp;
      }
      mant &= 0x3FF;
      bits = sign | (exp << 23) | (mant << 13);
    }
  } else if (exp == 0x1F) {
    bits = sign | 0x7F800000 | (mant << 13);
  } else {
    bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

float BFloat16ToFloat(std::uint16_t b) { return std::bit_cast<float>(static_cast<std::uint32_t>(b) << 16); }

std::string ShapeString(const std::vector<std::int64_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

SafeTensors SafeTensors::Open(const std::filesystem::path& path) {
  SafeTensors st;
  st.path_ = path.string();
  const int fd = ::open(st.path_.c_str(), O_RDONLY);
  if (fd < 0) throw BackendError("cannot open weights file " + st.path_);
  struct stat sb {};
  if (::fstat(fd, &sb) != 0 || sb.st_size < 8) {
    ::close(fd);
    throw BackendError("weights file too small: " + st.path_);
  }
  st.mapping_size_ = static_cast<std::size_t>(sb.st_size);
  st.mapping_ = ::mmap(nullptr, st.mapping_size_, PROT_READ, MAP_PRIVATE, fd, 0);
  ::close(fd);
  if (st.mapping_ == MAP_FAILED) {
    st.mapping_ = nullptr;
    throw BackendError("cannot map weights file " + st.path_);
  }

  const auto* base = static_cast<const std::byte*>(st.mapping_);
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, base, sizeof(header_len));  // little-endian on every supported host
  if (header_len > st.mapping_size_ - 8) throw BackendError("corrupt safetensors header in " + st.path_);
  const std::string_view header(reinterpret_cast<const char*>(base + 8), header_len);
  st.data_ = base + 8 + header_len;
  st.data_size_ = st.mapping_size_ - 8 - header_len;

  try {
    const auto doc = nlohmann::json::parse(header);
    for (const auto& [name, meta] : doc.items()) {
      if (name == "__metadata__") continue;
      Entry e;
      e.dtype = meta.at("dtype").get<std::string>();
      e.shape = meta.at("shape").get<std::vector<std::int64_t>>();
      const auto offsets = meta.at("data_offsets").get<std::vector<std::size_t>>();
      if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > st.data_size_) {
        throw BackendError("tensor " + name + " has bad data offsets in " + st.path_);
      }
      e.begin = offsets[0];
      e.end = offsets[1];
      st.entries_.emplace(name, std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError("corrupt safetensors header in " + st.path_ + ": " + e.what());
  }
  return st;
}

SafeTensors::SafeTensors(SafeTensors&& o) noexcept { *this = std::move(o); }

SafeTensors& SafeTensors::operator=(SafeTensors&& o) noexcept {
  if (this != &o) {
    if (mapping_ != nullptr) ::munmap(mapping_, mapping_size_);
    mapping_ = std::exchange(o.mapping_, nullptr);
    mapping_size_ = std::exchange(o.mapping_size_, 0);
    data_ = std::exchange(o.data_, nullptr);
    data_size_ = std::exchange(o.data_size_, 0);
    path_ = std::move(o.path_);
    entries_ = std::move(o.entries_);
    widened_ = std::move(o.widened_);
  }
  return *this;
}

SafeTensors::~SafeTensors() {
  if (mapping_ != nullptr) ::munmap(mapping_, mapping_size_);
}

bool SafeTensors::Has(std::string_view name) const { return entries_.find(name) != entries_.end(); }

const SafeTensors::Entry& SafeTensors::Lookup(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw BackendError("tensor " + std::string(name) + " missing from " + path_);
  return it->second;
}

const std::vector<std::int64_t>& SafeTensors::Shape(std::string_view name) const { return Lookup(name).shape; }

const float* SafeTensors::Floats(std::string_view name, const std::vector<std::int64_t>& expected_shape) {
  const Entry& e = Lookup(name);
  if (!expected_shape.empty() && e.shape != expected_shape) {
    throw BackendError("tensor " + std::string(name) + " has shape " + ShapeString(e.shape) + ", expected " +
                       ShapeString(expected_shape));
  }
  std::size_t count = 1;
  for (auto d : e.shape) count *= static_cast<std::size_t>(d);
  const std::byte* src = data_ + e.begin;

  if (e.dtype == "F32") {
    if (e.end - e.begin != count * 4) throw BackendError("tensor " + std::string(name) + " has a bad byte size");
    if (reinterpret_cast<std::uintptr_t>(src) % alignof(float) == 0) return reinterpret_cast<const float*>(src);
  }
  if (auto it = widened_.find(name); it != widened_.end()) return it->second.data();

  std::vector<float> out(count);
  if (e.dtype == "F32") {
    std::memcpy(out.data(), src, count * 4);
  } else if (e.dtype == "F16" || e.dtype == "BF16") {
    if (e.end - e.begin != count * 2) throw BackendError("tensor " + std::string(name) + " has a bad byte size");
    for (std::size_t i = 0; i < count; ++i) {
      std::uint16_t h;
      std::memcpy(&h, src + 2 * i, 2);
      out[i] = e.dtype == "F16" ? HalfToFloat(h) : BFloat16ToFloat(h);
    }
  } else {
    throw BackendError("tensor " + std::string(name) + " has unsupported dtype " + e.dtype);
  }
  return widened_.emplace(std::string(name), std::move(out)).first->second.data();
}

std::vector<std::string> SafeTensors::Names() const {
  std::vector<std::string> names;
  for (const auto& [n, e] : entries_) names.push_back(n);
  return names;
}

}  // namespace promptrank::model
