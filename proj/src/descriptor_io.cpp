#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "rx/descriptors.hpp"
#include "rx/error.hpp"

namespace rx {

namespace {

constexpr std::array<char, 4> kMagic{'R', 'X', 'D', 'G'};
constexpr std::size_t kHeaderBytes = 4 + 7 * 4;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& why) {
  throw Error(ErrorKind::CorruptDescriptorFile, "descriptor file " + path.string() + ": " + why);
}

DescriptorFileHeader parse_header(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, kHeaderBytes> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) corrupt(path, "truncated header");
  if (std::memcmp(buf.data(), kMagic.data(), 4) != 0) corrupt(path, "bad magic");
  DescriptorFileHeader h;
  h.version = read_u32(&buf[4]);
  h.patch_rows = read_u32(&buf[8]);
  h.patch_cols = read_u32(&buf[12]);
  h.descriptor_dim = read_u32(&buf[16]);
  h.patch_size = read_u32(&buf[20]);
  h.origin_x = static_cast<std::int32_t>(read_u32(&buf[24]));
  h.origin_y = static_cast<std::int32_t>(read_u32(&buf[28]));
  if (h.version != 1) corrupt(path, "unsupported version " + std::to_string(h.version));
  if (h.patch_rows == 0 || h.patch_cols == 0 || h.descriptor_dim == 0 || h.patch_size == 0)
    corrupt(path, "zero-sized dimension in header");
  return h;
}

std::uint64_t payload_bytes(const DescriptorFileHeader& h) {
  return static_cast<std::uint64_t>(h.patch_rows) * h.patch_cols * h.descriptor_dim * 4;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingAsset, "missing asset: " + path.string());
  return in;
}

}  // namespace

DescriptorFileHeader read_descriptor_header(const std::filesystem::path& path) {
  auto in = open(path);
  const auto h = parse_header(in, path);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec || size != kHeaderBytes + payload_bytes(h))
    corrupt(path, "payload size does not match header");
  return h;
}

DescriptorGrid read_descriptor_file(const std::filesystem::path& path, int frame_id) {
  auto in = open(path);
  const auto h = parse_header(in, path);
  const auto rows = static_cast<Eigen::Index>(h.patch_rows) * h.patch_cols;
  const auto dim = static_cast<Eigen::Index>(h.descriptor_dim);
  std::vector<unsigned char> raw(payload_bytes(h));
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    corrupt(path, "truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) corrupt(path, "trailing bytes after payload");

  RowMatrix data(rows, dim);
  for (Eigen::Index i = 0; i < rows * dim; ++i) {
    const std::uint32_t bits = read_u32(&raw[static_cast<std::size_t>(i) * 4]);
    data.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  if (!data.allFinite()) corrupt(path, "non-finite descriptor values");
  return DescriptorGrid(frame_id, static_cast<int>(h.patch_rows), static_cast<int>(h.patch_cols),
                        PatchLayout{static_cast<int>(h.patch_size), h.origin_x, h.origin_y}, std::move(data));
}

void write_descriptor_file(const std::filesystem::path& path, const DescriptorGrid& grid) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(kMagic.data(), 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(grid.patch_rows()));
  put_u32(out, static_cast<std::uint32_t>(grid.patch_cols()));
  put_u32(out, static_cast<std::uint32_t>(grid.descriptor_dim()));
  put_u32(out, static_cast<std::uint32_t>(grid.layout().patch_size));
  put_u32(out, static_cast<std::uint32_t>(grid.layout().origin_x));
  put_u32(out, static_cast<std::uint32_t>(grid.layout().origin_y));
  const auto& data = grid.data();
  for (Eigen::Index i = 0; i < data.size(); ++i)
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(data.data()[i])));
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace rx
