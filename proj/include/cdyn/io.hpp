#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdyn/field.hpp"

namespace cdyn {

inline constexpr std::uint32_t kContainerVersion = 1;

/// Little-endian binary writer over an in-memory buffer.
class ByteWriter {
public:
    void magic(std::string_view tag);
    void u32(std::uint32_t v);
    void f64(double v);
    void f64s(std::span<const double> vs);
    const std::vector<char>& bytes() const noexcept { return buf_; }

private:
    std::vector<char> buf_;
};

/// Bounds-checked reader; throws Io errors naming `source` on truncation.
class ByteReader {
public:
    ByteReader(std::vector<char> bytes, std::string source);
    void expect_magic(std::string_view tag);
    std::uint32_t u32();
    double f64();
    void f64s(std::span<double> out);
    bool at_end() const noexcept { return pos_ == buf_.size(); }
    const std::string& source() const noexcept { return source_; }

private:
    void need(std::size_t n);
    std::vector<char> buf_;
    std::string source_;
    std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const char> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// "CDYN" container: magic, version u32, H u32, frame count u32, dt f64,
/// then row-major f64 frames.
std::vector<char> encode_trajectory(const Trajectory& t);
Trajectory decode_trajectory(std::vector<char> bytes, const std::string& source = "<memory>");

void save_trajectory(const std::filesystem::path& path, const Trajectory& t);
Trajectory load_trajectory(const std::filesystem::path& path);

/// One CSV row per grid row.
void write_field_csv(std::ostream& os, const Field& f);

/// Fixed-format number rendering shared by every text artifact.
std::string format_fixed(double v, int decimals);
std::string format_sci(double v);

}  // namespace cdyn
