#include "lss/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lss {

static_assert(std::endian::native == std::endian::little,
              "LST1 writer assumes a little-endian host");

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_tensor: cannot open " + path);
    f.write("LST1", 4);
    uint32_t rank = static_cast<uint32_t>(t.rank());
    f.write(reinterpret_cast<const char*>(&rank), 4);
    for (int i = 0; i < t.rank(); ++i) {
        uint32_t d = static_cast<uint32_t>(t.dim(i));
        f.write(reinterpret_cast<const char*>(&d), 4);
    }
    f.write(reinterpret_cast<const char*>(t.ptr()), static_cast<std::streamsize>(t.size() * 8));
    if (!f) throw std::runtime_error("save_tensor: write failed for " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_tensor: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "LST1", 4) != 0) {
        throw std::runtime_error("load_tensor: bad magic in " + path);
    }
    uint32_t rank = 0;
    f.read(reinterpret_cast<char*>(&rank), 4);
    if (!f || rank == 0 || rank > 8) throw std::runtime_error("load_tensor: bad rank in " + path);
    std::vector<int> shape(rank);
    for (uint32_t i = 0; i < rank; ++i) {
        uint32_t d = 0;
        f.read(reinterpret_cast<char*>(&d), 4);
        if (!f || d == 0 || d > (1u << 24)) throw std::runtime_error("load_tensor: bad dim in " + path);
        shape[i] = static_cast<int>(d);
    }
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.ptr()), static_cast<std::streamsize>(t.size() * 8));
    if (!f) throw std::runtime_error("load_tensor: truncated payload in " + path);
    return t;
}

PgmMapping save_pgm(const std::string& path, const Tensor& image) {
    int h, w;
    const double* px;
    if (image.rank() == 2) {
        h = image.dim(0); w = image.dim(1); px = image.ptr();
    } else if (image.rank() == 3 && image.dim(0) == 1) {
        h = image.dim(1); w = image.dim(2); px = image.ptr();
    } else {
        throw std::invalid_argument("save_pgm: expected [h,w] or [1,h,w], got " + image.shape_str());
    }
    PgmMapping m;
    m.lo = px[0];
    m.hi = px[0];
    for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) {
        m.lo = std::min(m.lo, px[i]);
        m.hi = std::max(m.hi, px[i]);
    }
    double span = (m.hi > m.lo) ? (m.hi - m.lo) : 1.0;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_pgm: cannot open " + path);
    f << "P5\n" << w << " " << h << "\n255\n";
    for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) {
        double g = (px[i] - m.lo) / span * 255.0;
        unsigned char b = static_cast<unsigned char>(std::lround(std::min(255.0, std::max(0.0, g))));
        f.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!f) throw std::runtime_error("save_pgm: write failed for " + path);
    return m;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << content;
    if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace lss
