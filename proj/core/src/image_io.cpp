#include "fpr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fpr {

namespace {

std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

// next integer token in a PNM header, skipping whitespace and # comments
int pnm_int(std::istream& is, const std::string& path) {
    for (;;) {
        int ch = is.peek();
        if (ch == '#') {
            std::string line;
            std::getline(is, line);
        } else if (std::isspace(ch)) {
            is.get();
        } else {
            break;
        }
    }
    int v;
    if (!(is >> v)) throw std::runtime_error("malformed PNM header: " + path);
    return v;
}

ImageStack read_pnm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char p, kind;
    is.get(p).get(kind);
    if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6'))
        throw std::runtime_error("unsupported PNM type: " + path);
    const bool color = kind == '3' || kind == '6';
    const bool binary = kind == '5' || kind == '6';
    const int w = pnm_int(is, path);
    const int h = pnm_int(is, path);
    const int maxval = pnm_int(is, path);
    if (w <= 0 || h <= 0) throw std::runtime_error("bad PNM dimensions: " + path);
    if (maxval != 255) throw std::runtime_error("only 8-bit rasters supported: " + path);

    const int channels = color ? 3 : 1;
    const std::size_t n = static_cast<std::size_t>(w) * h * channels;
    std::vector<unsigned char> raw(n);
    if (binary) {
        is.get();  // single whitespace after maxval
        is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is.gcount()) != n)
            throw std::runtime_error("truncated PNM data: " + path);
    } else {
        for (auto& b : raw) {
            const int v = pnm_int(is, path);
            if (v < 0 || v > 255) throw std::runtime_error("PNM sample out of range: " + path);
            b = static_cast<unsigned char>(v);
        }
    }

    ImageStack stack(channels, RealGrid(h, w));
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < channels; ++ch)
                stack[ch].at(r, c) =
                    raw[(static_cast<std::size_t>(r) * w + c) * channels + ch] / 255.0;
    return stack;
}

ImageStack read_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw std::runtime_error("cannot read PNG: " + path + ": " + image.message);

    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    std::vector<unsigned char> raw(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw std::runtime_error("cannot decode PNG: " + path + ": " + msg);
    }

    ImageStack stack(channels, RealGrid(h, w));
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < channels; ++ch)
                stack[ch].at(r, c) =
                    raw[(static_cast<std::size_t>(r) * w + c) * channels + ch] / 255.0;
    return stack;
}

unsigned char quantize(double v) {
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return static_cast<unsigned char>(std::lround(v * 255.0));
}

std::vector<unsigned char> interleave(const ImageStack& image) {
    const int h = image[0].height, w = image[0].width;
    const int channels = static_cast<int>(image.size());
    std::vector<unsigned char> raw(static_cast<std::size_t>(h) * w * channels);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < channels; ++ch)
                raw[(static_cast<std::size_t>(r) * w + c) * channels + ch] =
                    quantize(image[ch].at(r, c));
    return raw;
}

}  // namespace

ImageStack load_image(const std::string& path, int expected_h, int expected_w,
                      int expected_channels) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::runtime_error("cannot open: " + path);
    unsigned char sig[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(sig), 2);
    probe.close();

    ImageStack stack;
    if (sig[0] == 0x89 && sig[1] == 'P')
        stack = read_png(path);
    else if (sig[0] == 'P')
        stack = read_pnm(path);
    else
        throw std::runtime_error("unrecognized image format: " + path);

    if (expected_channels > 0 && static_cast<int>(stack.size()) != expected_channels)
        throw std::runtime_error("channel count mismatch for " + path + ": have " +
                                 std::to_string(stack.size()) + ", expected " +
                                 std::to_string(expected_channels));
    if (expected_h > 0 && expected_w > 0 &&
        (stack[0].height != expected_h || stack[0].width != expected_w)) {
        if (stack[0].height < expected_h || stack[0].width < expected_w)
            throw std::runtime_error("image smaller than expected dims: " + path);
        stack = center_crop(stack, expected_h, expected_w);
    }
    return stack;
}

void save_image(const std::string& path, const ImageStack& image) {
    if (image.empty()) throw std::invalid_argument("save_image: empty stack");
    const int channels = static_cast<int>(image.size());
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("save_image: only 1 or 3 channels supported");
    for (const auto& g : image)
        if (!g.same_shape(image[0])) throw std::invalid_argument("save_image: ragged stack");

    const int h = image[0].height, w = image[0].width;
    const std::string ext = lower_ext(path);
    const auto raw = interleave(image);

    if (ext == "png") {
        png_image out;
        std::memset(&out, 0, sizeof out);
        out.version = PNG_IMAGE_VERSION;
        out.width = static_cast<png_uint_32>(w);
        out.height = static_cast<png_uint_32>(h);
        out.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
        if (!png_image_write_to_file(&out, path.c_str(), 0, raw.data(), 0, nullptr))
            throw std::runtime_error("cannot write PNG: " + path + ": " + out.message);
        return;
    }
    if ((ext == "pgm" && channels != 1) || (ext == "ppm" && channels != 3))
        throw std::invalid_argument("save_image: extension does not match channel count: " + path);
    if (ext != "pgm" && ext != "ppm")
        throw std::invalid_argument("save_image: unsupported extension: " + path);

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << (channels == 3 ? "P6" : "P5") << "\n" << w << " " << h << "\n255\n";
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

RealGrid preprocess_mnist(const RealGrid& img) {
    if (img.height != 28 || img.width != 28)
        throw std::invalid_argument("preprocess_mnist: expected a 28x28 image");
    RealGrid out = img;
    out.at(1, 1) = 1.0;
    out.at(26, 26) = 1.0;
    return out;
}

ImageStack center_crop(const ImageStack& image, int h, int w) {
    if (image.empty()) throw std::invalid_argument("center_crop: empty stack");
    const int H = image[0].height, W = image[0].width;
    if (h <= 0 || w <= 0 || h > H || w > W)
        throw std::invalid_argument("center_crop: target dims exceed image dims");
    const int r0 = (H - h) / 2, c0 = (W - w) / 2;
    ImageStack out;
    out.reserve(image.size());
    for (const auto& g : image) {
        RealGrid sub(h, w);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) sub.at(r, c) = g.at(r0 + r, c0 + c);
        out.push_back(std::move(sub));
    }
    return out;
}

}  // namespace fpr
