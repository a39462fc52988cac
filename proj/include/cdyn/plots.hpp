#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cdyn/field.hpp"

namespace cdyn {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

/// Line chart on the unit square (calibration curves).
std::string svg_curves(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       std::span<const Series> series);

struct Interval {
    double y;
    double mu;
    double lower;
    double upper;
};

/// Prediction intervals ordered by truth.
std::string svg_intervals(const std::string& title, std::span<const Interval> intervals);

struct PanelRow {
    std::string label;
    std::vector<Field> frames;
    bool symmetric = true;  // false: scale [0, max]
};

/// Heat-map grid, one row per PanelRow, one fixed color scale per row.
std::string svg_panels(std::span<const PanelRow> rows);

/// Renders calibration.svg, recalibration.svg, intervals.svg and panels.svg
/// from the CSVs and field containers of a run directory.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir);

}  // namespace cdyn
