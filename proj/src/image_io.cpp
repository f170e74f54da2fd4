#include "image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#ifdef HOMLAB_HAVE_PNG
#include <png.h>
#endif

namespace homlab {

namespace {

constexpr double kLumR = 0.299, kLumG = 0.587, kLumB = 0.114;

// Reads the next header token, skipping whitespace and '#' comments.
std::string NextToken(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int ParseHeaderInt(std::istream& in, const char* what) {
  const std::string tok = NextToken(in);
  if (tok.empty()) Fail(ErrorKind::kCorruptFile, std::string("missing ") + what + " in header");
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    Fail(ErrorKind::kCorruptFile, std::string("bad ") + what + " in header: " + tok);
  }
}

GrayImage ReadPnm(std::istream& in, const std::filesystem::path& path, bool color) {
  const int width = ParseHeaderInt(in, "width");
  const int height = ParseHeaderInt(in, "height");
  const int maxval = ParseHeaderInt(in, "maxval");
  if (width < 1 || height < 1) {
    Fail(ErrorKind::kCorruptFile, "bad dimensions in " + path.string());
  }
  if (maxval != 255) {
    Fail(ErrorKind::kUnsupportedFormat,
         path.string() + ": only maxval 255 is supported, got " + std::to_string(maxval));
  }
  const size_t n = static_cast<size_t>(width) * height * (color ? 3 : 1);
  std::vector<uint8_t> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    Fail(ErrorKind::kCorruptFile, path.string() + ": truncated raster");
  }
  GrayImage img(width, height);
  if (color) {
    for (size_t i = 0; i < img.data.size(); ++i) {
      const double y = kLumR * raw[3 * i] + kLumG * raw[3 * i + 1] + kLumB * raw[3 * i + 2];
      img.data[i] = static_cast<float>(y / 255.0);
    }
  } else {
    for (size_t i = 0; i < img.data.size(); ++i) {
      img.data[i] = static_cast<float>(raw[i] / 255.0);
    }
  }
  return img;
}

#ifdef HOMLAB_HAVE_PNG
GrayImage ReadPng(const std::filesystem::path& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) Fail(ErrorKind::kIo, "cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    Fail(ErrorKind::kIo, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    Fail(ErrorKind::kCorruptFile, path.string() + ": png decode error");
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_byte depth = png_get_bit_depth(png, info);
  png_byte color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    Fail(ErrorKind::kUnsupportedFormat, path.string() + ": 16-bit PNG not supported");
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    Fail(ErrorKind::kUnsupportedFormat, path.string() + ": unsupported PNG channel layout");
  }
  std::vector<uint8_t> raw(static_cast<size_t>(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = raw.data() + static_cast<size_t>(y) * width * channels;
  }
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  GrayImage img(width, height);
  if (channels == 3) {
    for (size_t i = 0; i < img.data.size(); ++i) {
      const double y = kLumR * raw[3 * i] + kLumG * raw[3 * i + 1] + kLumB * raw[3 * i + 2];
      img.data[i] = static_cast<float>(y / 255.0);
    }
  } else {
    for (size_t i = 0; i < img.data.size(); ++i) {
      img.data[i] = static_cast<float>(raw[i] / 255.0);
    }
  }
  return img;
}
#endif

uint8_t Quantize(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

GrayImage ReadImage(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2) Fail(ErrorKind::kCorruptFile, path.string() + ": empty file");
  if (magic[0] == 'P' && magic[1] == '5') return ReadPnm(in, path, /*color=*/false);
  if (magic[0] == 'P' && magic[1] == '6') return ReadPnm(in, path, /*color=*/true);
  if (static_cast<uint8_t>(magic[0]) == 0x89 && magic[1] == 'P') {
#ifdef HOMLAB_HAVE_PNG
    in.close();
    return ReadPng(path);
#else
    Fail(ErrorKind::kUnsupportedFormat, path.string() + ": built without PNG support");
#endif
  }
  Fail(ErrorKind::kUnsupportedFormat, path.string() + ": unrecognized image format");
}

void WritePgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot create " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> raw(img.data.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = Quantize(img.data[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

void WritePpm(const RgbImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot create " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

bool PngSupported() {
#ifdef HOMLAB_HAVE_PNG
  return true;
#else
  return false;
#endif
}

}  // namespace homlab
