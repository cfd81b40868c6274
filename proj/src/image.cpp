#include "nbv/image.hpp"

#include "nbv/error.hpp"

#include <fmt/format.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nbv {

GrayImage::GrayImage(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw InputError("image dimensions must be non-negative");
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0) throw InputError("image dimensions must be non-negative");
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw InputError(fmt::format("image has {} pixels, expected {}x{}", pixels_.size(), width, height));
  }
  for (double p : pixels_) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("image intensities must lie in [0, 1]");
  }
}

double GrayImage::sample_bilinear(double u, double v) const {
  const double x = std::clamp(u - 0.5, 0.0, static_cast<double>(width_ - 1));
  const double y = std::clamp(v - 0.5, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  const double top = (1.0 - ax) * at(x0, y0) + ax * at(x1, y0);
  const double bottom = (1.0 - ax) * at(x0, y1) + ax * at(x1, y1);
  return (1.0 - ay) * top + ay * bottom;
}

GrayImage quantize8(GrayImage image) {
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      image.at(x, y) = std::round(std::clamp(image.at(x, y), 0.0, 1.0) * 255.0) / 255.0;
    }
  }
  return image;
}

namespace {

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open image '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

GrayImage parse_pnm(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw FormatError(fmt::format("pnm: truncated header at byte offset {}", start));
    return bytes.substr(start, pos - start);
  };
  auto next_int = [&]() {
    const std::size_t at = pos;
    const std::string tok = next_token();
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw FormatError(fmt::format("pnm: bad header value '{}' at byte offset {}", tok, at));
    }
  };

  const std::string magic = next_token();
  if (magic != "P5" && magic != "P6") throw FormatError("pnm: only binary P5/P6 files are supported");
  const bool color = magic == "P6";
  const int width = next_int();
  const int height = next_int();
  const int maxval = next_int();
  if (maxval > 65535) throw FormatError("pnm: maxval exceeds 65535");
  ++pos;  // single whitespace after maxval

  const int channels = color ? 3 : 1;
  const int bytes_per_sample = maxval < 256 ? 1 : 2;
  const std::size_t needed = static_cast<std::size_t>(width) * height * channels * bytes_per_sample;
  if (pos + needed > bytes.size()) {
    throw FormatError(fmt::format("pnm: pixel data truncated at byte offset {}", bytes.size()));
  }
  std::vector<double> pixels(static_cast<std::size_t>(width) * height);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  auto sample = [&](std::size_t i) -> double {
    const unsigned value = bytes_per_sample == 1 ? data[i] : (data[2 * i] << 8) | data[2 * i + 1];
    return std::min(1.0, static_cast<double>(value) / maxval);
  };
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = color ? std::clamp(luma(sample(3 * i), sample(3 * i + 1), sample(3 * i + 2)), 0.0, 1.0) : sample(i);
  }
  return GrayImage(width, height, std::move(pixels));
}

GrayImage read_pnm(const std::filesystem::path& path) {
  try {
    return parse_pnm(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_pgm(const GrayImage& image) {
  std::string out = fmt::format("P5\n{} {}\n255\n", image.width(), image.height());
  out.reserve(out.size() + image.pixels().size());
  for (double p : image.pixels()) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0))));
  }
  return out;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  const std::string data = format_pgm(image);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw FormatError(fmt::format("{}: png: {}", path.string(), img.message));
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = img.message;
    png_image_free(&img);
    throw FormatError(fmt::format("{}: png: {}", path.string(), message));
  }
  const auto width = static_cast<int>(img.width);
  const auto height = static_cast<int>(img.height);
  std::vector<double> pixels(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const unsigned char r = buffer[3 * i];
    const unsigned char g = buffer[3 * i + 1];
    const unsigned char b = buffer[3 * i + 2];
    // Gray sources come back with r == g == b; keep them exact.
    pixels[i] = (r == g && g == b) ? r / 255.0 : std::clamp(luma(r / 255.0, g / 255.0, b / 255.0), 0.0, 1.0);
  }
  return GrayImage(width, height, std::move(pixels));
}

void write_png(const GrayImage& image, const std::filesystem::path& path) {
  std::vector<unsigned char> buffer(image.pixels().size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    buffer[i] = static_cast<unsigned char>(std::lround(std::clamp(image.pixels()[i], 0.0, 1.0) * 255.0));
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    throw InputError(fmt::format("cannot write '{}': {}", path.string(), img.message));
  }
}

GrayImage read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw InputError(fmt::format("unsupported image format '{}'", path.string()));
}

}  // namespace nbv
