#include "nbv/error.hpp"
#include "nbv/image.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace nbv;

namespace {

GrayImage random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(0, 255);
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = level(rng) / 255.0;
  return img;
}

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "nbv_image_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("PGM round trip is exact for 8-bit levels") {
  const GrayImage img = random_image(37, 23, 1);
  CHECK(parse_pnm(format_pgm(img)) == img);
  const auto path = temp_dir() / "a.pgm";
  write_pgm(img, path);
  CHECK(read_image(path) == img);
}

TEST_CASE("PNG round trip is exact for 8-bit levels") {
  const GrayImage img = random_image(40, 17, 2);
  const auto path = temp_dir() / "a.png";
  write_png(img, path);
  CHECK(read_image(path) == img);
}

TEST_CASE("16-bit PGM and color PPM") {
  std::string pgm16 = "P5\n2 1\n65535\n";
  pgm16 += std::string("\xff\xff\x00\x00", 4);
  const GrayImage a = parse_pnm(pgm16);
  CHECK(a.at(0, 0) == 1.0);
  CHECK(a.at(1, 0) == 0.0);

  std::string ppm = "P6\n# comment\n1 1\n255\n";
  ppm += std::string("\xff\x00\x00", 3);
  CHECK(parse_pnm(ppm).at(0, 0) == doctest::Approx(0.299));
}

TEST_CASE("malformed PNM is a format error") {
  CHECK_THROWS_AS(parse_pnm("P2\n1 1\n255\n0\n"), FormatError);
  CHECK_THROWS_AS(parse_pnm("P5\n2 2\n255\n\x01"), FormatError);
  CHECK_THROWS_AS(read_image(temp_dir() / "missing.pgm"), InputError);
  std::ofstream(temp_dir() / "bad.bmp") << "x";
  CHECK_THROWS_AS(read_image(temp_dir() / "bad.bmp"), InputError);
}

TEST_CASE("quantize8 rounds to the nearest level") {
  GrayImage img(3, 1, std::vector<double>{0.0, 0.5, 1.0});
  const GrayImage q = quantize8(img);
  CHECK(q.at(0, 0) == 0.0);
  CHECK(q.at(1, 0) == 128.0 / 255.0);
  CHECK(q.at(2, 0) == 1.0);
  CHECK(quantize8(q) == q);
}

TEST_CASE("pixel values outside [0, 1] are rejected") {
  CHECK_THROWS_AS(GrayImage(1, 1, std::vector<double>{1.5}), InputError);
  CHECK_THROWS_AS(GrayImage(2, 1, std::vector<double>{0.5}), InputError);
}

TEST_CASE("bilinear sampling") {
  GrayImage img(2, 2, std::vector<double>{0.0, 1.0, 0.0, 1.0});
  CHECK(img.sample_bilinear(0.5, 0.5) == 0.0);
  CHECK(img.sample_bilinear(1.5, 0.5) == 1.0);
  CHECK(img.sample_bilinear(1.0, 1.0) == doctest::Approx(0.5));
  CHECK(img.sample_bilinear(1.25, 0.7) == doctest::Approx(0.75));
  // Clamped beyond the border.
  CHECK(img.sample_bilinear(-3.0, 0.5) == 0.0);
  CHECK(img.sample_bilinear(9.0, 9.0) == 1.0);

  // Linear ramps are reproduced exactly between pixel centers.
  GrayImage ramp(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) ramp.at(x, y) = (x + 2.0 * y) / 30.0;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.5, 7.5);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(ramp.sample_bilinear(a, b) == doctest::Approx((a - 0.5 + 2.0 * (b - 0.5)) / 30.0).epsilon(1e-12));
  }
}
