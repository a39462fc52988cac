#include "cdyn/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cdyn/error.hpp"
#include "cdyn/io.hpp"

namespace cdyn {
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    return s == "-0.00" ? "0.00" : s;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string header(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" viewBox=\"0 0 " + num(w) + ' ' + num(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", double rotate = 0) {
    std::string t = "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + '"';
    if (rotate != 0) t += " transform=\"rotate(" + num(rotate) + ' ' + num(x) + ' ' + num(y) + ")\"";
    return t + '>' + escape(s) + "</text>\n";
}

struct Frame {
    double left, top, width, height;
    double x0, x1, y0, y1;
    double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
    double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

std::string axes(const Frame& f, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    std::string s;
    s += "<rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.width) + "\" height=\"" +
         num(f.height) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
        const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        s += "<line x1=\"" + num(f.px(xv)) + "\" y1=\"" + num(f.top + f.height) + "\" x2=\"" + num(f.px(xv)) +
             "\" y2=\"" + num(f.top + f.height + 4) + "\" stroke=\"black\"/>\n";
        s += text(f.px(xv), f.top + f.height + 18, num(xv));
        s += "<line x1=\"" + num(f.left - 4) + "\" y1=\"" + num(f.py(yv)) + "\" x2=\"" + num(f.left) + "\" y2=\"" +
             num(f.py(yv)) + "\" stroke=\"black\"/>\n";
        s += text(f.left - 8, f.py(yv) + 4, num(yv), "end");
    }
    s += text(f.left + f.width / 2, f.top - 12, title);
    s += text(f.left + f.width / 2, f.top + f.height + 40, xlabel);
    s += text(f.left - 48, f.top + f.height / 2, ylabel, "middle", -90);
    return s;
}

std::string polyline(const Frame& f, std::span<const double> x, std::span<const double> y, const std::string& color,
                     bool dashed) {
    std::string s = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"";
    if (dashed) s += " stroke-dasharray=\"6 4\"";
    s += " points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) s += ' ';
        s += num(f.px(x[i])) + ',' + num(f.py(y[i]));
    }
    return s + "\"/>\n";
}

// Diverging blue-white-red for t in [-1, 1]; white-to-red for t in [0, 1].
std::string color(double t, bool symmetric) {
    constexpr int kLevels = 16;
    t = std::clamp(t, symmetric ? -1.0 : 0.0, 1.0);
    const double q = std::round(t * kLevels) / kLevels;
    int r, g, b;
    if (q >= 0) {
        r = 255 - static_cast<int>(std::lround(75 * q));
        g = b = 255 - static_cast<int>(std::lround(225 * q));
    } else {
        r = g = 255 - static_cast<int>(std::lround(225 * -q));
        b = 255 - static_cast<int>(std::lround(75 * -q));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

// One table of numeric columns with a header line.
struct Csv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name, const fs::path& source) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) fail(ErrorKind::Io, "corrupt " + source.string() + ": no column " + name);
        const auto k = static_cast<std::size_t>(it - columns.begin());
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r[k]);
        return out;
    }
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    return out;
}

Csv read_csv(const fs::path& path) {
    if (!fs::exists(path)) fail(ErrorKind::Io, "missing file: " + path.string());
    std::istringstream in(read_text(path));
    Csv csv;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::Io, "corrupt " + path.string() + ": empty");
    csv.columns = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != csv.columns.size()) fail(ErrorKind::Io, "corrupt " + path.string() + ": ragged row");
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                fail(ErrorKind::Io, "corrupt " + path.string() + ": bad number '" + c + "'");
            }
        }
        csv.rows.push_back(std::move(row));
    }
    if (csv.rows.empty()) fail(ErrorKind::Io, "corrupt " + path.string() + ": no rows");
    return csv;
}

Trajectory read_fields(const fs::path& path) {
    if (!fs::exists(path)) fail(ErrorKind::Io, "missing file: " + path.string());
    return load_trajectory(path);
}

}  // namespace

std::string svg_curves(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       std::span<const Series> series) {
    const Frame f{80, 40, 360, 360, 0, 1, 0, 1};
    std::string s = header(600, 460) + axes(f, title, xlabel, ylabel);
    double ly = f.top + 10;
    for (const auto& sr : series) {
        s += polyline(f, sr.x, sr.y, sr.color, sr.dashed);
        s += "<line x1=\"460.00\" y1=\"" + num(ly) + "\" x2=\"484.00\" y2=\"" + num(ly) + "\" stroke=\"" + sr.color +
             "\" stroke-width=\"2\"" + (sr.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
        s += text(490, ly + 4, sr.label, "start");
        ly += 18;
    }
    return s + "</svg>\n";
}

std::string svg_intervals(const std::string& title, std::span<const Interval> intervals) {
    require(!intervals.empty(), "svg_intervals: no intervals");
    double lo = intervals.front().y, hi = lo;
    for (const auto& iv : intervals) {
        lo = std::min({lo, iv.y, iv.lower, iv.mu});
        hi = std::max({hi, iv.y, iv.upper, iv.mu});
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double n = static_cast<double>(intervals.size());
    const Frame f{80, 40, 480, 340, 0, std::max(1.0, n - 1), lo, hi};
    std::string s = header(600, 440) + axes(f, title, "index (ordered by truth)", "value");
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const double x = f.px(static_cast<double>(i));
        s += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.py(intervals[i].lower)) + "\" x2=\"" + num(x) + "\" y2=\"" +
             num(f.py(intervals[i].upper)) + "\" stroke=\"#7fa7d6\"/>\n";
        s += "<circle cx=\"" + num(x) + "\" cy=\"" + num(f.py(intervals[i].mu)) + "\" r=\"1.5\" fill=\"#1f4e8c\"/>\n";
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        xs.push_back(static_cast<double>(i));
        ys.push_back(intervals[i].y);
    }
    s += polyline(f, xs, ys, "#d62728", false);
    return s + "</svg>\n";
}

std::string svg_panels(std::span<const PanelRow> rows) {
    require(!rows.empty(), "svg_panels: no rows");
    const std::size_t cols = rows.front().frames.size();
    require(cols > 0, "svg_panels: no frames");
    const std::size_t n = rows.front().frames.front().size();
    const double tile = 96, gap = 8, left = 110, top = 30;
    const double cell = tile / static_cast<double>(n);
    std::string s = header(left + static_cast<double>(cols) * (tile + gap) + gap,
                           top + static_cast<double>(rows.size()) * (tile + gap) + gap);
    for (std::size_t c = 0; c < cols; ++c)
        s += text(left + static_cast<double>(c) * (tile + gap) + tile / 2, top - 10, "t+" + std::to_string(c + 1));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        require(row.frames.size() == cols, "svg_panels: ragged rows");
        double scale = 0.0;
        for (const auto& f : row.frames)
            for (double v : f.values()) scale = std::max(scale, std::abs(v));
        const double y0 = top + static_cast<double>(r) * (tile + gap);
        s += text(left - 10, y0 + tile / 2, row.label, "end");
        for (std::size_t c = 0; c < cols; ++c) {
            const Field& f = row.frames[c];
            require(f.size() == n, "svg_panels: mixed grid sizes");
            const double x0 = left + static_cast<double>(c) * (tile + gap);
            s += "<g shape-rendering=\"crispEdges\">\n";
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t j = 0;
                while (j < n) {
                    const std::string col = color(scale > 0 ? f(i, j) / scale : 0.0, row.symmetric);
                    std::size_t k = j + 1;
                    while (k < n && color(scale > 0 ? f(i, k) / scale : 0.0, row.symmetric) == col) ++k;
                    s += "<rect x=\"" + num(x0 + static_cast<double>(j) * cell) + "\" y=\"" +
                         num(y0 + static_cast<double>(i) * cell) + "\" width=\"" +
                         num(static_cast<double>(k - j) * cell) + "\" height=\"" + num(cell) + "\" fill=\"" + col +
                         "\"/>\n";
                    j = k;
                }
            }
            s += "</g>\n";
        }
    }
    return s + "</svg>\n";
}

std::vector<fs::path> emit_plots(const fs::path& run_dir) {
    const Csv cal = read_csv(run_dir / "calibration.csv");
    const Csv recal = read_csv(run_dir / "recalibration.csv");
    const Csv iv = read_csv(run_dir / "intervals.csv");
    const Trajectory truth = read_fields(run_dir / "truth.cdyn");
    const Trajectory mean = read_fields(run_dir / "forecast_mean.cdyn");
    const Trajectory sigma = read_fields(run_dir / "forecast_sigma.cdyn");
    if (mean.frames.size() != truth.frames.size() || sigma.frames.size() != truth.frames.size() ||
        mean.frames.front().size() != truth.frames.front().size())
        fail(ErrorKind::Io, "corrupt field panels in " + run_dir.string() + ": mismatched containers");

    const std::vector<double> diag{0.0, 1.0};
    std::vector<fs::path> out;
    const auto put = [&](const char* name, const std::string& svg) {
        write_text(run_dir / name, svg);
        out.push_back(run_dir / name);
    };

    const Series ideal{"ideal", "#888888", diag, diag, true};
    const Series raw{"observed", "#1f77b4", cal.column("expected", run_dir / "calibration.csv"),
                     cal.column("observed", run_dir / "calibration.csv")};
    const Series fixed{"recalibrated", "#2ca02c", recal.column("expected", run_dir / "recalibration.csv"),
                       recal.column("observed", run_dir / "recalibration.csv")};
    const Series calibration[] = {ideal, raw};
    put("calibration.svg", svg_curves("Average calibration", "expected proportion", "observed proportion", calibration));
    const Series recalibration[] = {ideal, raw, fixed};
    put("recalibration.svg",
        svg_curves("Recalibrated calibration", "expected proportion", "observed proportion", recalibration));

    const auto p = run_dir / "intervals.csv";
    const auto ys = iv.column("y", p), mus = iv.column("mu", p), los = iv.column("lower", p), his = iv.column("upper", p);
    std::vector<Interval> intervals;
    for (std::size_t i = 0; i < ys.size(); ++i) intervals.push_back({ys[i], mus[i], los[i], his[i]});
    put("intervals.svg", svg_intervals("Ordered prediction intervals", intervals));

    std::vector<Field> diff;
    for (std::size_t h = 0; h < truth.frames.size(); ++h) {
        std::vector<double> d(truth.frames[h].values().size());
        for (std::size_t c = 0; c < d.size(); ++c)
            d[c] = std::abs(truth.frames[h].values()[c] - mean.frames[h].values()[c]);
        diff.emplace_back(truth.frames[h].size(), std::move(d));
    }
    const PanelRow rows[] = {{"truth", truth.frames, true},
                             {"prediction", mean.frames, true},
                             {"|difference|", diff, false},
                             {"sigma", sigma.frames, false}};
    put("panels.svg", svg_panels(rows));
    return out;
}

}  // namespace cdyn
