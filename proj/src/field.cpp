#include "cdyn/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cdyn/error.hpp"
#include "cdyn/rng.hpp"

namespace cdyn {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

namespace {

void check_size(std::size_t size) {
    require(size >= 4 && is_power_of_two(size),
            "field size must be a power of two >= 4, got " + std::to_string(size));
}

void check_same_size(const Field& a, const Field& b) {
    require(a.size() == b.size(), "field size mismatch: " + std::to_string(a.size()) + " vs " +
                                      std::to_string(b.size()));
}

}  // namespace

Field::Field(std::size_t size) : size_(size), values_(size * size, 0.0) { check_size(size); }

Field::Field(std::size_t size, std::vector<double> values) : size_(size), values_(std::move(values)) {
    check_size(size);
    require(values_.size() == size * size, "field value count does not match size");
    for (double v : values_)
        if (!std::isfinite(v)) fail(ErrorKind::Numeric, "field contains a non-finite value");
}

double Field::mean() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

Field& Field::operator+=(const Field& other) {
    check_same_size(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    check_same_size(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

Field& Field::operator*=(double scale) {
    for (double& v : values_) v *= scale;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double scale, Field f) { return f *= scale; }

void Trajectory::validate() const {
    require(frames.size() >= 2, "trajectory needs at least 2 frames");
    require(dt > 0.0, "trajectory dt must be positive");
    for (const auto& f : frames) require(f.size() == frames.front().size(), "trajectory frames differ in size");
}

void rotate_quarter(std::span<const double> in, std::size_t n, std::span<double> out) {
    require(in.size() == n * n && out.size() == n * n, "rotate_quarter: buffer size mismatch");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = in[j * n + (n - 1 - i)];
}

Field rot90(const Field& f) {
    Field out(f.size());
    rotate_quarter(f.values(), f.size(), out.values());
    return out;
}

Trajectory rot90(const Trajectory& t) {
    Trajectory out{.frames = {}, .dt = t.dt};
    out.frames.reserve(t.frames.size());
    for (const auto& f : t.frames) out.frames.push_back(rot90(f));
    return out;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "l2_distance: length mismatch");
    // Summing in sorted order makes the result a function of the multiset of
    // squared differences, so any permutation of cells (rot90) is bit-exact.
    std::vector<double> sq(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq[i] = d * d;
    }
    std::sort(sq.begin(), sq.end());
    double sum = 0.0;
    for (double v : sq) sum += v;
    return std::sqrt(sum);
}

double l2_dist(const Field& a, const Field& b) {
    check_same_size(a, b);
    return l2_distance(a.values(), b.values());
}

DatasetSplits make_splits(std::size_t n_traj, std::uint64_t seed) {
    const std::size_t n_val = n_traj * 20 / 100;
    const std::size_t n_cal = n_traj * 5 / 100;
    const std::size_t n_test = n_cal;
    require(n_traj >= 20 && n_cal >= 1,
            "make_splits: need at least 20 trajectories for nonempty cal/test, got " + std::to_string(n_traj));

    std::vector<std::size_t> order(n_traj);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x5b117));
    rng.shuffle(order.begin(), order.end());

    const std::size_t n_train = n_traj - n_val - n_cal - n_test;
    auto take = [&](std::size_t from, std::size_t count) {
        return std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(from),
                                        order.begin() + static_cast<std::ptrdiff_t>(from + count));
    };
    DatasetSplits s;
    s.train = take(0, n_train);
    s.val = take(n_train, n_val);
    s.cal = take(n_train + n_val, n_cal);
    s.test = take(n_train + n_val + n_cal, n_test);
    return s;
}

}  // namespace cdyn
