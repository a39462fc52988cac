#include "cdyn/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>

#include "cdyn/error.hpp"

namespace cdyn {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

void ByteWriter::magic(std::string_view tag) { buf_.insert(buf_.end(), tag.begin(), tag.end()); }

void ByteWriter::u32(std::uint32_t v) {
    char raw[4];
    std::memcpy(raw, &v, 4);
    buf_.insert(buf_.end(), raw, raw + 4);
}

void ByteWriter::f64(double v) {
    char raw[8];
    std::memcpy(raw, &v, 8);
    buf_.insert(buf_.end(), raw, raw + 8);
}

void ByteWriter::f64s(std::span<const double> vs) {
    const auto* p = reinterpret_cast<const char*>(vs.data());
    buf_.insert(buf_.end(), p, p + vs.size_bytes());
}

ByteReader::ByteReader(std::vector<char> bytes, std::string source)
    : buf_(std::move(bytes)), source_(std::move(source)) {}

void ByteReader::need(std::size_t n) {
    if (buf_.size() - pos_ < n) fail(ErrorKind::Io, source_ + ": truncated container");
}

void ByteReader::expect_magic(std::string_view tag) {
    need(tag.size());
    if (std::string_view(buf_.data() + pos_, tag.size()) != tag)
        fail(ErrorKind::Io, source_ + ": bad magic, expected " + std::string(tag));
    pos_ += tag.size();
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buf_.data() + pos_, 4);
    pos_ += 4;
    return v;
}

double ByteReader::f64() {
    need(8);
    double v;
    std::memcpy(&v, buf_.data() + pos_, 8);
    pos_ += 8;
    return v;
}

void ByteReader::f64s(std::span<double> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), buf_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
}

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    write_file(path, std::span<const char>(text.data(), text.size()));
}

std::string read_text(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    return {bytes.begin(), bytes.end()};
}

std::vector<char> encode_trajectory(const Trajectory& t) {
    t.validate();
    ByteWriter w;
    w.magic("CDYN");
    w.u32(kContainerVersion);
    w.u32(static_cast<std::uint32_t>(t.grid_size()));
    w.u32(static_cast<std::uint32_t>(t.frames.size()));
    w.f64(t.dt);
    for (const auto& f : t.frames) w.f64s(f.values());
    return w.bytes();
}

Trajectory decode_trajectory(std::vector<char> bytes, const std::string& source) {
    ByteReader r(std::move(bytes), source);
    r.expect_magic("CDYN");
    const auto version = r.u32();
    if (version != kContainerVersion)
        fail(ErrorKind::Io, source + ": unsupported container version " + std::to_string(version));
    const std::size_t size = r.u32();
    const std::size_t count = r.u32();
    Trajectory t;
    t.dt = r.f64();
    if (size < 4 || !is_power_of_two(size) || count < 2 || !(t.dt > 0.0))
        fail(ErrorKind::Io, source + ": invalid container header");
    t.frames.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> values(size * size);
        r.f64s(values);
        try {
            t.frames.emplace_back(size, std::move(values));
        } catch (const Error& e) {
            fail(ErrorKind::Io, source + ": " + e.what());
        }
    }
    if (!r.at_end()) fail(ErrorKind::Io, source + ": trailing bytes after last frame");
    return t;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& t) {
    write_file(path, encode_trajectory(t));
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    return decode_trajectory(read_file(path), path.string());
}

void write_field_csv(std::ostream& os, const Field& f) {
    for (std::size_t i = 0; i < f.size(); ++i) {
        for (std::size_t j = 0; j < f.size(); ++j) {
            if (j) os << ',';
            os << format_sci(f(i, j));
        }
        os << '\n';
    }
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    // avoid "-0.0000" for tiny negatives
    std::string s(buf);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string format_sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace cdyn
