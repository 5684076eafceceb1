// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace emgpop::binio {

// All on-disk integers and doubles are little-endian regardless of host order.

class Writer {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    template <typename UInt>
    void uint(UInt v)
    {
        for (std::size_t i = 0; i < sizeof(UInt); ++i)
            buf_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
    }

    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

    const std::vector<char>& buffer() const { return buf_; }

    void save(const std::filesystem::path& path) const
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError("cannot open '" + path.string() + "' for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out)
            throw ConfigError("write failed for '" + path.string() + "'");
    }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    Reader(std::vector<char> data, std::string what) : buf_(std::move(data)), what_(std::move(what)) {}

    static Reader from_file(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ConfigError("cannot open '" + path.string() + "' for reading");
        std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return Reader(std::move(data), path.string());
    }

    std::size_t remaining() const { return buf_.size() - pos_; }

    void need(std::size_t n) const
    {
        if (remaining() < n)
            throw TruncationError(what_ + ": truncated payload (needed " + std::to_string(n) +
                                  " more bytes at offset " + std::to_string(pos_) + ", have " +
                                  std::to_string(remaining()) + ")");
    }

    std::string bytes(std::size_t n)
    {
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    template <typename UInt>
    UInt uint()
    {
        need(sizeof(UInt));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += sizeof(UInt);
        return static_cast<UInt>(v);
    }

    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

    void expect_end() const
    {
        if (remaining() != 0)
            throw DataError(what_ + ": " + std::to_string(remaining()) + " trailing bytes after payload");
    }

    const std::string& what() const { return what_; }

private:
    std::vector<char> buf_;
    std::size_t pos_ = 0;
    std::string what_;
};

} // namespace emgpop::binio
