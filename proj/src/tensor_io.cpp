#include "decompal/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "decompal/types.hpp"

namespace decompal {
namespace {

constexpr std::array<char, 4> kMagic{'D', 'T', 'E', 'N'};
constexpr std::size_t kMaxRank = 8;

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
    return value;
  } else {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }
}

template <typename T>
void put(std::ostream& out, T value) {
  value = to_little(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("truncated DTEN stream");
  return to_little(value);
}

template <typename T>
void put_payload(std::ostream& out, const std::vector<T>& values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(T)));
  } else {
    for (T v : values) put(out, v);
  }
}

template <typename T>
std::vector<T> get_payload(std::istream& in, std::size_t count) {
  std::vector<T> values(count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw ValidationError("truncated DTEN payload");
  if constexpr (std::endian::native != std::endian::little) {
    for (T& v : values) v = to_little(v);
  }
  return values;
}

}  // namespace

std::size_t DenseTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write_tensor(std::ostream& out, const DenseTensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > kMaxRank) {
    throw ValidationError("DTEN rank must be in [1, 8]");
  }
  const std::size_t stored = tensor.dtype() == DType::u16 ? tensor.u16().size() : tensor.f32().size();
  if (stored != tensor.element_count()) throw ValidationError("DTEN payload does not match dims");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put<std::uint32_t>(out, d);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.dtype()));
  if (tensor.dtype() == DType::u16) {
    put_payload(out, tensor.u16());
  } else {
    put_payload(out, tensor.f32());
  }
}

DenseTensor read_tensor(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ValidationError("not a DTEN stream");
  const auto rank = get<std::uint8_t>(in);
  if (rank == 0 || rank > kMaxRank) throw ValidationError("DTEN rank must be in [1, 8]");
  DenseTensor tensor;
  for (int i = 0; i < rank; ++i) tensor.dims.push_back(get<std::uint32_t>(in));
  const auto tag = get<std::uint8_t>(in);
  const std::size_t count = tensor.element_count();
  if (tag == static_cast<std::uint8_t>(DType::u16)) {
    tensor.data = get_payload<std::uint16_t>(in, count);
  } else if (tag == static_cast<std::uint8_t>(DType::f32)) {
    tensor.data = get_payload<float>(in, count);
  } else {
    throw ValidationError("unknown DTEN dtype tag");
  }
  return tensor;
}

void save_tensor(const std::filesystem::path& path, const DenseTensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_tensor(out, tensor);
  if (!out) throw Error("failed writing " + path.string());
}

DenseTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace decompal
