#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <variant>
#include <vector>

namespace decompal {

// DTEN container: "DTEN", u8 rank, rank x u32 dims, u8 dtype tag, then the
// row-major payload. Everything little-endian.
//   tag 0: u16 class ids (one-based in files written by this library)
//   tag 1: f32
enum class DType : std::uint8_t { u16 = 0, f32 = 1 };

struct DenseTensor {
  std::vector<std::uint32_t> dims;
  std::variant<std::vector<std::uint16_t>, std::vector<float>> data;

  DType dtype() const { return data.index() == 0 ? DType::u16 : DType::f32; }
  std::size_t element_count() const;

  const std::vector<std::uint16_t>& u16() const { return std::get<0>(data); }
  const std::vector<float>& f32() const { return std::get<1>(data); }

  bool operator==(const DenseTensor&) const = default;
};

void write_tensor(std::ostream& out, const DenseTensor& tensor);
DenseTensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const DenseTensor& tensor);
DenseTensor load_tensor(const std::filesystem::path& path);

}  // namespace decompal
