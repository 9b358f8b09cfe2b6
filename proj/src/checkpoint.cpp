#include "skyshield/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace skyshield {

namespace {

template <typename T>
void put_le(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

struct Reader {
  const unsigned char* p;
  std::size_t left;
  std::string file;

  void need(std::size_t n) {
    if (left < n) raise(ErrorCode::TruncatedRecord, "checkpoint truncated: " + file);
  }
  template <typename T>
  T take() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= T(p[i]) << (8 * i);
    p += sizeof(T);
    left -= sizeof(T);
    return v;
  }
};

}  // namespace

void save_checkpoint(const LUnetModel<float>& model, const std::filesystem::path& path) {
  const LUnetConfig& cfg = model.config;
  std::string buf;
  buf.append(kCheckpointMagic, 4);
  put_le(buf, kCheckpointVersion);
  put_le(buf, std::uint16_t(cfg.in_channels));
  put_le(buf, std::uint16_t(cfg.base_channels));
  put_le(buf, std::uint16_t(cfg.depth));
  put_le(buf, std::uint16_t(cfg.kernel_size));
  put_le(buf, std::uint64_t(cfg.seed));

  auto put_tensor = [&buf](const Eigen::Array<float, Eigen::Dynamic, 1>& data,
                           std::initializer_list<std::uint32_t> dims) {
    put_le(buf, std::uint32_t(dims.size()));
    for (std::uint32_t d : dims) put_le(buf, d);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      put_le(buf, std::bit_cast<std::uint32_t>(data[i]));
    }
  };
  for (const Conv<float>& c : model.layers) {
    put_tensor(c.w, {std::uint32_t(c.out_ch), std::uint32_t(c.in_ch), std::uint32_t(c.k),
                     std::uint32_t(c.k)});
    put_tensor(c.b, {std::uint32_t(c.out_ch)});
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot open " + path.string());
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) raise(ErrorCode::IoFailure, "write failed for " + path.string());
}

LUnetModel<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::MissingModel, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::IoFailure, "read failed for " + path.string());

  Reader r{reinterpret_cast<const unsigned char*>(data.data()), data.size(), path.string()};
  r.need(4);
  if (std::memcmp(r.p, kCheckpointMagic, 4) != 0) {
    raise(ErrorCode::MalformedHeader, "bad checkpoint magic");
  }
  r.p += 4;
  r.left -= 4;
  const auto version = r.take<std::uint16_t>();
  if (version != kCheckpointVersion) {
    raise(ErrorCode::MalformedHeader, "unsupported checkpoint version " + std::to_string(version));
  }

  LUnetConfig cfg;
  cfg.in_channels = r.take<std::uint16_t>();
  cfg.base_channels = r.take<std::uint16_t>();
  cfg.depth = r.take<std::uint16_t>();
  cfg.kernel_size = r.take<std::uint16_t>();
  cfg.seed = r.take<std::uint64_t>();
  cfg.validate();

  LUnetModel<float> model = init_model<float>(cfg);
  for (Conv<float>& c : model.layers) {
    auto read_tensor = [&r](Eigen::Array<float, Eigen::Dynamic, 1>& dst,
                            std::initializer_list<std::uint32_t> dims) {
      const auto nd = r.take<std::uint32_t>();
      if (nd != dims.size()) raise(ErrorCode::MalformedRecord, "unexpected tensor rank");
      std::size_t total = 1;
      for (std::uint32_t want : dims) {
        const auto got = r.take<std::uint32_t>();
        if (got != want) raise(ErrorCode::MalformedRecord, "unexpected tensor dimension");
        total *= got;
      }
      if (Eigen::Index(total) != dst.size()) {
        raise(ErrorCode::MalformedRecord, "tensor size mismatch");
      }
      for (Eigen::Index i = 0; i < dst.size(); ++i) {
        dst[i] = std::bit_cast<float>(r.take<std::uint32_t>());
      }
    };
    read_tensor(c.w, {std::uint32_t(c.out_ch), std::uint32_t(c.in_ch), std::uint32_t(c.k),
                      std::uint32_t(c.k)});
    read_tensor(c.b, {std::uint32_t(c.out_ch)});
  }
  if (r.left != 0) raise(ErrorCode::MalformedRecord, "trailing bytes in checkpoint");
  return model;
}

}  // namespace skyshield
