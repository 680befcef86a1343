#pragma once

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "corosa/grid.hpp"

namespace corosa {

// ---- raw 64-bit formats ----
// "COROSA-F64 <width> <height>\n" + little-endian doubles, row-major.
// "COROSA-C64 <width> <height>\n" + interleaved (re, im) pairs.

namespace detail {

inline void write_doubles_le(std::ofstream& f, const double* p, size_t n) {
    static_assert(sizeof(double) == 8);
    f.write(reinterpret_cast<const char*>(p), std::streamsize(n * 8));
}

inline void read_doubles_le(std::ifstream& f, double* p, size_t n) {
    f.read(reinterpret_cast<char*>(p), std::streamsize(n * 8));
    if (!f) throw std::runtime_error("truncated raw payload");
}

inline std::string read_header_token(std::istream& f) {
    std::string s;
    f >> s;
    return s;
}

}  // namespace detail

inline void write_f64(const std::string& path, const ImageGrid& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "COROSA-F64 " << img.width << " " << img.height << "\n";
    detail::write_doubles_le(f, img.data.data(), img.size());
}

inline ImageGrid read_f64(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic = detail::read_header_token(f);
    if (magic != "COROSA-F64") throw std::runtime_error(path + ": not a COROSA-F64 file");
    int w, h;
    f >> w >> h;
    f.get();  // newline
    ImageGrid img(w, h);
    detail::read_doubles_le(f, img.data.data(), img.size());
    return img;
}

inline void write_c64(const std::string& path, const ComplexGrid& g) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "COROSA-C64 " << g.width << " " << g.height << "\n";
    detail::write_doubles_le(f, reinterpret_cast<const double*>(g.data.data()), g.size() * 2);
}

inline ComplexGrid read_c64(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic = detail::read_header_token(f);
    if (magic != "COROSA-C64") throw std::runtime_error(path + ": not a COROSA-C64 file");
    int w, h;
    f >> w >> h;
    f.get();
    ComplexGrid g(w, h);
    detail::read_doubles_le(f, reinterpret_cast<double*>(g.data.data()), g.size() * 2);
    return g;
}

// ---- PGM ----

/// Binary PGM; maxval 255 or 65535 (big-endian 16-bit per the format).
inline void write_pgm(const std::string& path, const ImageGrid& img, int maxval = 65535) {
    if (maxval != 255 && maxval != 65535) throw std::invalid_argument("write_pgm: maxval must be 255 or 65535");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
    for (double v : img.data) {
        long q = std::lround(std::clamp(v, 0.0, 1.0) * maxval);
        if (maxval == 255) {
            unsigned char b = static_cast<unsigned char>(q);
            f.write(reinterpret_cast<const char*>(&b), 1);
        } else {
            unsigned char b[2] = {static_cast<unsigned char>(q >> 8), static_cast<unsigned char>(q & 0xff)};
            f.write(reinterpret_cast<const char*>(b), 2);
        }
    }
}

/// Reads P5/P2, 8 or 16 bit, normalized to [0, 1].
inline ImageGrid read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5" && magic != "P2") throw std::runtime_error(path + ": not a PGM file");
    auto next_int = [&f, &path]() {
        // skip whitespace and # comments
        int c;
        while ((c = f.peek()) != EOF) {
            if (c == '#') {
                std::string line;
                std::getline(f, line);
            } else if (std::isspace(c)) {
                f.get();
            } else {
                break;
            }
        }
        long v;
        if (!(f >> v)) throw std::runtime_error(path + ": bad PGM header");
        return v;
    };
    long w = next_int(), h = next_int(), maxval = next_int();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw std::runtime_error(path + ": bad PGM header");
    ImageGrid img{int(w), int(h)};
    if (magic == "P2") {
        for (double& v : img.data) {
            long q;
            if (!(f >> q)) throw std::runtime_error(path + ": truncated PGM");
            v = double(q) / double(maxval);
        }
        return img;
    }
    f.get();  // single whitespace after maxval
    int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(img.size() * size_t(bytes));
    f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (!f) throw std::runtime_error(path + ": truncated PGM");
    for (size_t i = 0; i < img.size(); ++i) {
        long q = bytes == 1 ? buf[i] : (long(buf[2 * i]) << 8) | buf[2 * i + 1];
        img.data[i] = double(q) / double(maxval);
    }
    return img;
}

/// 0/255 binary mask.
inline void write_mask_pgm(const std::string& path, const ImageGrid& mask) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    for (double v : mask.data) {
        unsigned char b = v != 0.0 ? 255 : 0;
        f.write(reinterpret_cast<const char*>(&b), 1);
    }
}

inline ImageGrid read_mask_pgm(const std::string& path) {
    ImageGrid img = read_pgm(path);
    for (double& v : img.data) v = v >= 0.5 ? 1.0 : 0.0;
    return img;
}

// ---- PNG (grayscale 8/16-bit in, normalized to [0, 1]) ----

inline ImageGrid read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error(path + ": PNG decode failed");
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_uint_32 w = png_get_image_width(png, info), h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);
    int maxval = depth == 16 ? 65535 : 255;
    size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<unsigned char> row(rowbytes);
    ImageGrid img{int(w), int(h)};
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x) {
            long q = depth == 16 ? (long(row[2 * x]) << 8) | row[2 * x + 1] : row[x];
            img.at(int(x), int(y)) = double(q) / double(maxval);
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

/// Dispatch on file magic: PGM, PNG, or COROSA-F64. PGM/PNG come back
/// normalized to [0, 1]; F64 is read verbatim.
inline ImageGrid load_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    char magic[8] = {};
    f.read(magic, 8);
    f.close();
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2')) return read_pgm(path);
    if (std::memcmp(magic, "\x89PNG", 4) == 0) return read_png(path);
    if (std::memcmp(magic, "COROSA-F", 8) == 0) return read_f64(path);
    throw std::runtime_error(path + ": unrecognized image format");
}

}  // namespace corosa
