#include "adbn/binary_io.hpp"
#include "adbn/error.hpp"

#include <bit>
#include <cstring>

namespace adbn {

namespace {

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
        std::memcpy(&v, raw, sizeof(T));
    }
    return v;
}

template <typename T>
void append(std::string& out, T v) {
    v = to_little(v);
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    out.append(raw, sizeof(T));
}

}  // namespace

void ByteWriter::u32(std::uint32_t v) { append(buffer_, v); }
void ByteWriter::u64(std::uint64_t v) { append(buffer_, v); }
void ByteWriter::f64(double v) { append(buffer_, std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::f64s(std::span<const double> values) {
    for (double v : values) f64(v);
}

void ByteWriter::bytes(std::string_view raw) { buffer_.append(raw); }

void ByteReader::need(std::size_t n) const {
    if (remaining() < n) {
        fail(ErrorCode::format_error, "unexpected end of data at byte " + std::to_string(pos_) +
                                          " (needed " + std::to_string(n) + ")");
    }
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buffer_.data() + pos_, 4);
    pos_ += 4;
    return to_little(v);
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, buffer_.data() + pos_, 8);
    pos_ += 8;
    return to_little(v);
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::f64s(std::span<double> out) {
    need(out.size() * 8);
    for (double& v : out) v = f64();
}

std::string_view ByteReader::bytes(std::size_t n) {
    need(n);
    auto view = buffer_.substr(pos_, n);
    pos_ += n;
    return view;
}

}  // namespace adbn
