#include <array>
#include <fstream>
#include <iterator>

#include "edgehml/detail/binary_io.hpp"
#include "edgehml/learner.hpp"

namespace edgehml {

namespace {
constexpr std::array<std::uint8_t, 8> kModelMagic = {'E', 'H', 'M', 'L', 'M', 'O', 'D', 'L'};
constexpr std::size_t kModelHeaderSize = 8 + 2 + 2 + 4 + 4 + 4;
}  // namespace

template <typename Scalar>
void save_checkpoint(const Mlp<Scalar>& m, const std::filesystem::path& path) {
  const auto flat = m.flatten();
  detail::ByteWriter w(kModelHeaderSize + 4 * flat.size());
  w.put_bytes(kModelMagic);
  w.put_uint<std::uint16_t>(kModelVersion);
  w.put_uint<std::uint16_t>(0);
  w.put_uint<std::uint32_t>(static_cast<std::uint32_t>(m.input_dim()));
  w.put_uint<std::uint32_t>(static_cast<std::uint32_t>(m.hidden_dim()));
  w.put_uint<std::uint32_t>(static_cast<std::uint32_t>(m.num_classes()));
  for (Scalar v : flat) w.put_f32(static_cast<float>(v));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(w.data(), static_cast<std::streamsize>(w.size()));
  if (!out) throw IoError("cannot write checkpoint " + path.string());
}

template <typename Scalar>
Mlp<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < kModelHeaderSize) throw FormatError("checkpoint: truncated header");
  detail::ByteReader r(bytes);
  const auto magic = r.get_bytes(kModelMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kModelMagic.begin())) throw FormatError("checkpoint: bad magic");
  if (r.get_uint<std::uint16_t>() != kModelVersion) throw FormatError("checkpoint: unsupported version");
  r.skip(2);
  const auto d = static_cast<Eigen::Index>(r.get_uint<std::uint32_t>());
  const auto h = static_cast<Eigen::Index>(r.get_uint<std::uint32_t>());
  const auto c = static_cast<Eigen::Index>(r.get_uint<std::uint32_t>());
  const auto n = static_cast<std::size_t>(d * h + h + c * h + c);
  if (bytes.size() != kModelHeaderSize + 4 * n) throw FormatError("checkpoint: size does not match D/H/C");
  std::vector<Scalar> flat(n);
  for (auto& v : flat) v = static_cast<Scalar>(r.get_f32());
  return Mlp<Scalar>::unflatten(flat, d, h, c);
}

template void save_checkpoint<float>(const Mlp<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const Mlp<double>&, const std::filesystem::path&);
template Mlp<float> load_checkpoint<float>(const std::filesystem::path&);
template Mlp<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace edgehml
