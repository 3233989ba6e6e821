#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace adbn {

// Little-endian byte writer/reader for the model container.
class ByteWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64s(std::span<const double> values);
    void bytes(std::string_view raw);

    const std::string& buffer() const noexcept { return buffer_; }

private:
    std::string buffer_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view buffer) : buffer_(buffer) {}

    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    void f64s(std::span<double> out);
    std::string_view bytes(std::size_t n);

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return buffer_.size() - pos_; }

private:
    void need(std::size_t n) const;

    std::string_view buffer_;
    std::size_t pos_ = 0;
};

}  // namespace adbn
