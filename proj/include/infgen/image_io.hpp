#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "infgen/tensor.hpp"

// Row-streaming image writers. Both take interleaved RGB float rows in tanh
// range [-1, 1]; the canvas and streaming render paths feed the same writers,
// so their outputs are byte-identical.

namespace infgen {

class RowWriter {
public:
    virtual ~RowWriter() = default;
    virtual void write_rows(const float* rgb, int nrows) = 0;
    virtual void finish() = 0;
};

// IFGR dump: magic "IFGR" | u32 height | u32 width | row-major interleaved
// RGB 32-bit floats, everything little-endian.
class RawWriter : public RowWriter {
public:
    RawWriter(const std::string& path, int h, int w) : f_(path, std::ios::binary | std::ios::trunc), w_(w) {
        if (!f_) throw Error(Errc::io_failure, "raw writer: cannot open '" + path + "'");
        f_.write("IFGR", 4);
        put_u32(static_cast<std::uint32_t>(h));
        put_u32(static_cast<std::uint32_t>(w));
    }

    void write_rows(const float* rgb, int nrows) override {
        buf_.clear();
        std::size_t n = static_cast<std::size_t>(nrows) * w_ * 3;
        buf_.reserve(n * 4);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t v;
            std::memcpy(&v, &rgb[i], 4);
            for (int b = 0; b < 4; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
        }
        f_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!f_) throw Error(Errc::io_failure, "raw writer: write failed");
    }

    void finish() override {
        f_.flush();
        if (!f_) throw Error(Errc::io_failure, "raw writer: flush failed");
    }

private:
    void put_u32(std::uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        f_.write(b, 4);
    }

    std::ofstream f_;
    int w_;
    std::vector<char> buf_;
};

// Tanh value -> 8-bit: (x+1)/2 * 255, clamped, ties to even.
inline std::uint8_t quantize_u8(float x) {
    float y = (x + 1.0f) * 0.5f * 255.0f;
    if (y < 0.0f) y = 0.0f;
    if (y > 255.0f) y = 255.0f;
    return static_cast<std::uint8_t>(std::nearbyintf(y));
}

// Minimal streaming PNG encoder (8-bit RGB, filter 0 rows, one IDAT chunk per
// flush). zlib level is pinned for reproducibility.
class PngWriter : public RowWriter {
public:
    PngWriter(const std::string& path, int h, int w) : f_(path, std::ios::binary | std::ios::trunc), w_(w) {
        if (!f_) throw Error(Errc::io_failure, "png writer: cannot open '" + path + "'");
        static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
        f_.write(reinterpret_cast<const char*>(sig), 8);
        std::vector<unsigned char> ihdr(13);
        put_be32(&ihdr[0], static_cast<std::uint32_t>(w));
        put_be32(&ihdr[4], static_cast<std::uint32_t>(h));
        ihdr[8] = 8;   // bit depth
        ihdr[9] = 2;   // truecolor
        ihdr[10] = ihdr[11] = ihdr[12] = 0;
        chunk("IHDR", ihdr.data(), ihdr.size());

        std::memset(&z_, 0, sizeof(z_));
        if (deflateInit(&z_, 6) != Z_OK) throw Error(Errc::io_failure, "png writer: deflateInit failed");
    }

    ~PngWriter() override {
        if (!finished_) deflateEnd(&z_);
    }

    void write_rows(const float* rgb, int nrows) override {
        scan_.clear();
        scan_.reserve(static_cast<std::size_t>(nrows) * (1 + 3 * w_));
        for (int r = 0; r < nrows; ++r) {
            scan_.push_back(0);  // filter: none
            const float* row = rgb + static_cast<std::size_t>(r) * w_ * 3;
            for (int i = 0; i < w_ * 3; ++i) scan_.push_back(quantize_u8(row[i]));
        }
        pump(scan_.data(), scan_.size(), Z_NO_FLUSH);
    }

    void finish() override {
        pump(nullptr, 0, Z_FINISH);
        deflateEnd(&z_);
        finished_ = true;
        chunk("IEND", nullptr, 0);
        f_.flush();
        if (!f_) throw Error(Errc::io_failure, "png writer: flush failed");
    }

private:
    static void put_be32(unsigned char* p, std::uint32_t v) {
        p[0] = static_cast<unsigned char>(v >> 24);
        p[1] = static_cast<unsigned char>(v >> 16);
        p[2] = static_cast<unsigned char>(v >> 8);
        p[3] = static_cast<unsigned char>(v);
    }

    void chunk(const char* type, const unsigned char* data, std::size_t n) {
        unsigned char hdr[8];
        put_be32(hdr, static_cast<std::uint32_t>(n));
        std::memcpy(hdr + 4, type, 4);
        f_.write(reinterpret_cast<const char*>(hdr), 8);
        if (n) f_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
        uLong crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
        if (n) crc = crc32(crc, data, static_cast<uInt>(n));
        unsigned char tail[4];
        put_be32(tail, static_cast<std::uint32_t>(crc));
        f_.write(reinterpret_cast<const char*>(tail), 4);
        if (!f_) throw Error(Errc::io_failure, "png writer: write failed");
    }

    void pump(const unsigned char* data, std::size_t n, int flush) {
        z_.next_in = const_cast<Bytef*>(data);
        z_.avail_in = static_cast<uInt>(n);
        std::vector<unsigned char> out(1 << 16);
        idat_.clear();
        int ret;
        do {
            z_.next_out = out.data();
            z_.avail_out = static_cast<uInt>(out.size());
            ret = deflate(&z_, flush);
            if (ret == Z_STREAM_ERROR) throw Error(Errc::io_failure, "png writer: deflate failed");
            idat_.insert(idat_.end(), out.data(), out.data() + (out.size() - z_.avail_out));
        } while (z_.avail_out == 0 || (flush == Z_FINISH && ret != Z_STREAM_END));
        if (!idat_.empty()) chunk("IDAT", idat_.data(), idat_.size());
    }

    std::ofstream f_;
    int w_;
    z_stream z_;
    bool finished_ = false;
    std::vector<unsigned char> scan_;
    std::vector<unsigned char> idat_;
};

}  // namespace infgen
