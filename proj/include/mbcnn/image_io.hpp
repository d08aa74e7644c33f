#pragma once

#include <string>
#include <vector>

#include "mbcnn/tensor.hpp"

namespace mbcnn {

// 8-bit RGB image file to a (1,h,w,3) tensor in [0,1]. PNG and binary PPM
// (P6, maxval 255) are sniffed by magic bytes. 16-bit PNGs are rejected.
Tensor read_image(const std::string& path);

// (1,h,w,3) tensor to an 8-bit RGB PNG. Values are clamped to [0,1] and
// rounded half away from zero.
void write_image(const Tensor& img, const std::string& path);

// sorted .png/.ppm paths directly under dir
std::vector<std::string> list_images(const std::string& dir);

}  // namespace mbcnn
