#pragma once

#include <filesystem>

#include "dsfs/image.hpp"

namespace dsfs::io {

// Loaders normalise to [0, 1]. Colour inputs are converted with
// luma weights 0.299 / 0.587 / 0.114.
GrayImage read_pgm(const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);

/// Dispatches on the file signature, not the extension.
GrayImage read_image(const std::filesystem::path& path);

// Writers quantise to 8 bits after clamping to [0, 1].
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
void write_png(const std::filesystem::path& path, const GrayImage& img);

/// Writes `bytes` to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace dsfs::io
