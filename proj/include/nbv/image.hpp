#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nbv {

/// Row-major grayscale image with intensities in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  /// Throws InputError if the pixel count or value range is wrong.
  GrayImage(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<double>& pixels() const { return pixels_; }

  double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Bilinear lookup at continuous image coordinates (pixel centers sit at
  /// i + 0.5); coordinates outside the image clamp to the border.
  double sample_bilinear(double u, double v) const;

  bool operator==(const GrayImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Rec. 601 luma, inputs and output in [0, 1].
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

/// Binary PGM (P5) or PPM (P6), 8 or 16 bit. Color input is converted with luma().
GrayImage read_pnm(const std::filesystem::path& path);
GrayImage parse_pnm(const std::string& bytes);
/// 8-bit binary PGM; values are rounded to the nearest of 256 levels.
std::string format_pgm(const GrayImage& image);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

/// 8-bit gray, gray+alpha, RGB or RGBA PNG (alpha ignored).
GrayImage read_png(const std::filesystem::path& path);
void write_png(const GrayImage& image, const std::filesystem::path& path);

/// Dispatches on extension: .pgm/.ppm/.pnm or .png.
GrayImage read_image(const std::filesystem::path& path);

/// Rounds every pixel to the nearest multiple of 1/255.
GrayImage quantize8(GrayImage image);

}  // namespace nbv
