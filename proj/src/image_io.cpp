#include "skyshield/image_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "skyshield/errors.hpp"

namespace skyshield {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoFailure, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot open " + path.string());
  return out;
}

// Netpbm token: skips whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(char(c));
      break;
    }
  }
  while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(char(c));
  return tok;
}

long parse_long(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    raise(ErrorCode::MalformedHeader, std::string("bad ") + what + ": '" + tok + "'");
  }
}

}  // namespace

Mask read_mask_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (next_token(in) != "P5") raise(ErrorCode::MalformedHeader, "not a P5 PGM");
  const long w = parse_long(next_token(in), "width");
  const long h = parse_long(next_token(in), "height");
  const long maxval = parse_long(next_token(in), "maxval");
  if (w <= 0 || h <= 0 || maxval != 255) {
    raise(ErrorCode::MalformedHeader, "unsupported PGM geometry or maxval");
  }
  // exactly one whitespace byte separates header and raster; already consumed
  std::string raster(std::size_t(w) * std::size_t(h), '\0');
  in.read(raster.data(), std::streamsize(raster.size()));
  if (std::size_t(in.gcount()) != raster.size()) {
    raise(ErrorCode::TruncatedRecord, "PGM raster shorter than declared");
  }

  Mask mask(h, w);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      const unsigned char v = (unsigned char)raster[std::size_t(y) * w + x];
      if (v != 0 && v != 255) {
        raise(ErrorCode::MalformedRecord, "PGM pixel not in {0,255}");
      }
      mask(y, x) = v ? 1 : 0;
    }
  }
  return mask;
}

void write_mask_pgm(const Mask& mask, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "P5\n" << mask.cols() << " " << mask.rows() << "\n255\n";
  std::string raster;
  raster.reserve(std::size_t(mask.size()));
  for (Eigen::Index y = 0; y < mask.rows(); ++y) {
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      raster.push_back(mask(y, x) ? char(255) : char(0));
    }
  }
  out.write(raster.data(), std::streamsize(raster.size()));
  if (!out) raise(ErrorCode::IoFailure, "write failed for " + path.string());
}

ImageD read_image_pfm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (next_token(in) != "Pf") raise(ErrorCode::MalformedHeader, "not a grayscale PFM");
  const long w = parse_long(next_token(in), "width");
  const long h = parse_long(next_token(in), "height");
  const std::string scale_tok = next_token(in);
  double scale = 0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    raise(ErrorCode::MalformedHeader, "bad PFM scale: '" + scale_tok + "'");
  }
  if (w <= 0 || h <= 0 || scale == 0) {
    raise(ErrorCode::MalformedHeader, "bad PFM geometry or scale");
  }
  const bool little_endian = scale < 0;

  std::string raster(std::size_t(w) * std::size_t(h) * 4, '\0');
  in.read(raster.data(), std::streamsize(raster.size()));
  if (std::size_t(in.gcount()) != raster.size()) {
    raise(ErrorCode::TruncatedRecord, "PFM raster shorter than declared");
  }

  ImageD img(h, w);
  const auto* p = reinterpret_cast<const unsigned char*>(raster.data());
  for (long row = 0; row < h; ++row) {
    const long y = h - 1 - row;  // PFM rows run bottom-to-top
    for (long x = 0; x < w; ++x, p += 4) {
      std::uint32_t bits = little_endian
                               ? (std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                                  std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24)
                               : (std::uint32_t(p[3]) | std::uint32_t(p[2]) << 8 |
                                  std::uint32_t(p[1]) << 16 | std::uint32_t(p[0]) << 24);
      img(y, x) = double(std::bit_cast<float>(bits));
    }
  }
  return img;
}

void write_image_pfm(const ImageD& img, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "Pf\n" << img.cols() << " " << img.rows() << "\n-1.0\n";
  std::string raster;
  raster.reserve(std::size_t(img.size()) * 4);
  for (Eigen::Index row = img.rows() - 1; row >= 0; --row) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      const auto bits = std::bit_cast<std::uint32_t>(float(img(row, x)));
      raster.push_back(char(bits & 0xff));
      raster.push_back(char((bits >> 8) & 0xff));
      raster.push_back(char((bits >> 16) & 0xff));
      raster.push_back(char((bits >> 24) & 0xff));
    }
  }
  out.write(raster.data(), std::streamsize(raster.size()));
  if (!out) raise(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace skyshield
