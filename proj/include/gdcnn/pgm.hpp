#pragma once

#include <string>

#include "gdcnn/tensor.hpp"

namespace gdcnn {

/// Reads a binary P5 portable graymap (8-bit) into a rank-2 [H,W] tensor
/// scaled to [0,1]. Throws on bad magic, maxval > 255, or a short payload.
Tensor read_pgm(const std::string& path);

/// Writes a rank-2 [H,W] tensor as binary P5, maxval 255. Values are
/// clamped to [0,1] and quantized with round-half-away.
void write_pgm(const Tensor& grid, const std::string& path);

}  // namespace gdcnn
