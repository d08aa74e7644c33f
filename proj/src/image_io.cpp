#include "mbcnn/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace mbcnn {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

Tensor from_rgb8(const std::vector<unsigned char>& buf, int h, int w) {
  Tensor img(Shape{1, h, w, 3});
  float* p = img.mutable_data();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    p[i] = static_cast<float>(buf[i]) / 255.0f;
  }
  return img;
}

Tensor read_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    fail(path, std::string("not a readable PNG (") + image.message + ")");
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    fail(path, "16-bit PNG input is not supported; convert to 8-bit first");
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(path, "PNG decode failed (" + msg + ")");
  }
  return from_rgb8(buf, int(image.height), int(image.width));
}

// P6 binary PPM, maxval 255
Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  auto next_token = [&in, &path]() {
    std::string tok;
    while (true) {
      int ch = in.get();
      if (ch == EOF) fail(path, "truncated PPM header");
      if (ch == '#') {
        while (ch != EOF && ch != '\n') ch = in.get();
        continue;
      }
      if (std::isspace(ch)) {
        if (tok.empty()) continue;
        return tok;
      }
      tok.push_back(char(ch));
    }
  };
  if (next_token() != "P6") fail(path, "not a P6 PPM");
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (w < 1 || h < 1) fail(path, "bad PPM size");
  if (maxval != 255) fail(path, "only 8-bit PPM (maxval 255) is supported");
  std::vector<unsigned char> buf(std::size_t(h) * w * 3);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (std::size_t(in.gcount()) != buf.size()) fail(path, "truncated PPM data");
  return from_rgb8(buf, h, w);
}

}  // namespace

Tensor read_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) fail(path, "cannot open");
  unsigned char magic[8] = {};
  probe.read(reinterpret_cast<char*>(magic), 8);
  probe.close();
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G',
                                           0x0d, 0x0a, 0x1a, 0x0a};
  if (std::equal(png_sig, png_sig + 8, magic)) return read_png(path);
  if (magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
  fail(path, "unrecognized image format (need PNG or P6 PPM)");
}

void write_image(const Tensor& img, const std::string& path) {
  if (img.shape().n != 1 || img.shape().c != 3) {
    throw std::invalid_argument(path + ": write_image needs a (1,h,w,3) tensor");
  }
  const int h = img.shape().h, w = img.shape().w;
  std::vector<unsigned char> buf(std::size_t(h) * w * 3);
  const float* p = img.data();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    float v = p[i];
    if (v < 0.0f) v = 0.0f;
    if (v > 1.0f) v = 1.0f;
    buf[i] = static_cast<unsigned char>(std::floor(v * 255.0f + 0.5f));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(w);
  image.height = png_uint_32(h);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0,
                               nullptr)) {
    fail(path, std::string("PNG write failed (") + image.message + ")");
  }
}

std::vector<std::string> list_images(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error(dir + ": not a directory");
  }
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".ppm") out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mbcnn
