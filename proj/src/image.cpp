#include "curafuse/image.hpp"

#include "curafuse/io.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <cctype>
#include <csetjmp>
#include <cstring>
#include <string>

namespace curafuse {
namespace {

bool has_prefix(std::span<const std::uint8_t> b, std::initializer_list<std::uint8_t> magic) {
  if (b.size() < magic.size()) return false;
  std::size_t i = 0;
  for (auto m : magic)
    if (b[i++] != m) return false;
  return true;
}

Raster decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw ImageDecodeError(std::string("png: ") + image.message);
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Raster out(image.width, image.height, gray ? 1 : 3);
  if (out.empty()) {
    png_image_free(&image);
    throw ImageDecodeError("png: empty image");
  }
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ImageDecodeError("png: " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Raster decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  // Only trivially destructible state lives across the setjmp boundary.
  Raster* volatile result = nullptr;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    delete result;
    throw ImageDecodeError(std::string("jpeg: ") + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  result = new Raster(cinfo.output_width, cinfo.output_height,
                      static_cast<std::size_t>(cinfo.output_components));
  const std::size_t stride = result->width * result->channels;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = result->pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  Raster out = std::move(*result);
  delete result;
  return out;
}

// Binary PGM (P5) / PPM (P6) with maxval <= 255.
Raster decode_pnm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      return;
    }
  };
  auto read_uint = [&]() -> std::size_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw ImageDecodeError("pnm: bad header");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1u << 24)) throw ImageDecodeError("pnm: dimension too large");
    }
    return v;
  };
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  const std::size_t w = read_uint();
  const std::size_t h = read_uint();
  const std::size_t maxval = read_uint();
  if (w == 0 || h == 0) throw ImageDecodeError("pnm: empty image");
  if (maxval == 0 || maxval > 255) throw ImageDecodeError("pnm: unsupported maxval");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ImageDecodeError("pnm: bad header");
  ++pos;
  Raster out(w, h, channels);
  if (bytes.size() - pos < out.pixels.size()) throw ImageDecodeError("pnm: truncated data");
  std::memcpy(out.pixels.data(), bytes.data() + pos, out.pixels.size());
  if (maxval != 255)
    for (auto& p : out.pixels) p = static_cast<std::uint8_t>((p * 255u + maxval / 2) / maxval);
  return out;
}

}  // namespace

Raster decode_image_bytes(std::span<const std::uint8_t> bytes) {
  if (has_prefix(bytes, {0x89, 'P', 'N', 'G'})) return decode_png(bytes);
  if (has_prefix(bytes, {0xFF, 0xD8, 0xFF})) return decode_jpeg(bytes);
  if (has_prefix(bytes, {'P', '5'}) || has_prefix(bytes, {'P', '6'})) return decode_pnm(bytes);
  throw ImageDecodeError("unrecognized image format");
}

Raster decode_image(const ImageRef& ref) {
  if (const auto* path = std::get_if<std::filesystem::path>(&ref)) {
    std::vector<std::uint8_t> bytes;
    try {
      bytes = read_binary_file(*path);
    } catch (const DataError& e) {
      throw ImageDecodeError(e.what());
    }
    return decode_image_bytes(bytes);
  }
  return decode_image_bytes(std::get<std::vector<std::uint8_t>>(ref));
}

std::vector<std::uint8_t> encode_pnm(const Raster& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("encode_pnm: channels must be 1 or 3");
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(img.width) + " " + std::to_string(img.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_png(const Raster& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  switch (img.channels) {
    case 1: image.format = PNG_FORMAT_GRAY; break;
    case 3: image.format = PNG_FORMAT_RGB; break;
    case 4: image.format = PNG_FORMAT_RGBA; break;
    default: throw std::invalid_argument("encode_png: bad channel count");
  }
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, img.pixels.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

}  // namespace curafuse
