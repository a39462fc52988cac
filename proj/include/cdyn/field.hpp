#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cdyn {

/// One snapshot of the state on a periodic H x H grid, row-major.
/// H is a power of two, at least 4, and every value is finite.
class Field {
public:
    Field() = default;
    /// Zero field.
    explicit Field(std::size_t size);
    Field(std::size_t size, std::vector<double> values);

    std::size_t size() const noexcept { return size_; }
    std::size_t cell_count() const noexcept { return values_.size(); }

    double operator()(std::size_t row, std::size_t col) const { return values_[row * size_ + col]; }
    double& operator()(std::size_t row, std::size_t col) { return values_[row * size_ + col]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double mean() const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double scale);

    friend bool operator==(const Field&, const Field&) = default;

private:
    std::size_t size_ = 0;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double scale, Field f);

bool is_power_of_two(std::size_t n) noexcept;

/// Time-ordered frames with a uniform step. Frames share one grid size.
struct Trajectory {
    std::vector<Field> frames;
    double dt = 1.0;

    std::size_t grid_size() const { return frames.empty() ? 0 : frames.front().size(); }
    /// Throws if the invariants (>= 2 frames, common H, dt > 0) do not hold.
    void validate() const;
};

/// Counter-clockwise quarter turn of an n x n row-major array:
/// out[i][j] = in[j][n-1-i].
void rotate_quarter(std::span<const double> in, std::size_t n, std::span<double> out);

Field rot90(const Field& f);
Trajectory rot90(const Trajectory& t);

/// Frobenius norm of a - b, no grid-size normalization.
double l2_distance(std::span<const double> a, std::span<const double> b);
double l2_dist(const Field& a, const Field& b);

/// Disjoint index sets over a trajectory collection.
struct DatasetSplits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> cal;
    std::vector<std::size_t> test;
};

/// 70/20/5/5 split of a seeded shuffle; rounding remainder goes to train.
DatasetSplits make_splits(std::size_t n_traj, std::uint64_t seed);

}  // namespace cdyn
