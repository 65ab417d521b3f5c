#include "dsfs/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "dsfs/error.hpp"

namespace dsfs::io {

namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_sibling(const fs::path& path) {
    fs::path tmp = path;
    tmp += ".tmp";
    return tmp;
}

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

GrayImage read_pgm(const fs::path& path) {
    const std::string bytes = read_all(path);
    std::size_t pos = 0;
    auto next_token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return bytes.substr(start, pos - start);
    };
    if (next_token() != "P5") throw DataError(path.string() + ": not a binary PGM (P5)");
    std::size_t width = 0, height = 0, maxval = 0;
    try {
        width = std::stoul(next_token());
        height = std::stoul(next_token());
        maxval = std::stoul(next_token());
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed PGM header");
    }
    if (maxval == 0 || maxval > 65535) throw DataError(path.string() + ": bad PGM maxval");
    ++pos;  // single whitespace before raster
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (bytes.size() < pos + width * height * bpp) throw DataError(path.string() + ": truncated PGM");
    GrayImage img(width, height);
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (std::size_t i = 0; i < width * height; ++i) {
        const unsigned v = bpp == 1 ? raw[i] : (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
        img.data()[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return img;
}

void write_pgm(const fs::path& path, const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    for (double v : img.data()) out.push_back(static_cast<char>(quantize(v)));
    write_file_atomic(path, out);
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

GrayImage read_png(const fs::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("libpng initialisation failed");
    }
    std::vector<png_bytep> rows;
    std::vector<unsigned char> buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError(path.string() + ": corrupt PNG");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_alpha(png);
    if (png_get_bit_depth(png, info) == 16) png_set_swap(png);  // native little-endian 16-bit
    png_read_update_info(png, info);
    const auto width = static_cast<std::size_t>(png_get_image_width(png, info));
    const auto height = static_cast<std::size_t>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    const int depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buffer.resize(rowbytes * height);
    rows.resize(height);
    for (std::size_t y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const double maxval = depth == 16 ? 65535.0 : 255.0;
    auto channel = [&](std::size_t y, std::size_t x, int c) -> double {
        const unsigned char* row = rows[y];
        if (depth == 16) {
            std::uint16_t v;
            std::memcpy(&v, row + 2 * (x * channels + c), 2);
            return v / maxval;
        }
        return row[x * channels + c] / maxval;
    };
    GrayImage img(width, height);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            img.at(x, y) = channels >= 3
                               ? 0.299 * channel(y, x, 0) + 0.587 * channel(y, x, 1) + 0.114 * channel(y, x, 2)
                               : channel(y, x, 0);
        }
    }
    return img;
}

void write_png(const fs::path& path, const GrayImage& img) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = temp_sibling(path);
    {
        FilePtr fp(std::fopen(tmp.c_str(), "wb"));
        if (!fp) throw DataError("cannot write " + tmp.string());
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png ? png_create_info_struct(png) : nullptr;
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            throw DataError("libpng initialisation failed");
        }
        std::vector<unsigned char> row(img.width());
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw DataError("failed writing " + path.string());
        }
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                     PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (std::size_t y = 0; y < img.height(); ++y) {
            for (std::size_t x = 0; x < img.width(); ++x) row[x] = quantize(img.at(x, y));
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    fs::rename(tmp, path);
}

GrayImage read_image(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::array<char, 8> sig{};
    in.read(sig.data(), sig.size());
    static constexpr std::array<unsigned char, 8> kPngSig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (in.gcount() == 8 && std::equal(kPngSig.begin(), kPngSig.end(), sig.begin(),
                                       [](unsigned char a, char b) { return a == static_cast<unsigned char>(b); })) {
        return read_png(path);
    }
    if (in.gcount() >= 2 && sig[0] == 'P' && sig[1] == '5') return read_pgm(path);
    throw DataError(path.string() + ": unsupported image format (expected PNG or P5 PGM)");
}

}  // namespace dsfs::io
