#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "enhance.hpp"
#include "grid.hpp"
#include "regcalc.hpp"
#include "controlled.hpp"
#include "roughint.hpp"

namespace roughreg {

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline std::vector<std::vector<double>> read_csv_numeric(const std::string& file, std::string& header) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file);
    std::vector<std::vector<double>> rows;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file " + file);
    header = line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto& c : cells) {
            size_t used = 0;
            double v = std::stod(c, &used);
            if (used == 0) throw std::runtime_error("bad number in " + file);
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

// --- sampled paths ----------------------------------------------------------

// Header t,x1,..,xd; one row per node, full double precision.
inline void write_path_csv(const std::string& file, const GridPath& p) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    out << "t";
    for (int j = 0; j < p.dim; ++j) out << ",x" << (j + 1);
    out << "\n";
    for (int k = 0; k <= p.grid.steps; ++k) {
        out << detail::fmt17(p.grid.node(k));
        for (int j = 0; j < p.dim; ++j) out << "," << detail::fmt17(p.at(k, j));
        out << "\n";
    }
}

// Grid is recovered from the time column; spacing must be uniform.
inline GridPath read_path_csv(const std::string& file) {
    std::string header;
    auto rows = detail::read_csv_numeric(file, header);
    if (rows.size() < 2) throw std::runtime_error("path file needs at least two nodes: " + file);
    int dim = static_cast<int>(rows[0].size()) - 1;
    if (dim < 1) throw std::runtime_error("path file needs a value column: " + file);
    int steps = static_cast<int>(rows.size()) - 1;
    Grid grid{rows.back()[0], steps};
    if (!(grid.horizon > 0)) throw std::runtime_error("path horizon must be positive: " + file);
    double dt = grid.dt();
    std::vector<double> values;
    values.reserve(static_cast<size_t>(steps + 1) * dim);
    for (int k = 0; k <= steps; ++k) {
        if (static_cast<int>(rows[k].size()) != dim + 1)
            throw std::runtime_error("ragged path file: " + file);
        if (std::abs(rows[k][0] - k * dt) > 1e-9 * std::max(1.0, grid.horizon))
            throw std::runtime_error("non-uniform time column: " + file);
        for (int j = 0; j < dim; ++j) values.push_back(rows[k][j + 1]);
    }
    return GridPath(grid, dim, std::move(values));
}

// --- evaluation series ------------------------------------------------------

// Long format: one row per matrix entry, eps,t,row,col,value.
inline void write_series_csv(const std::string& file, const EvalSeries& s) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    out << "eps,t,row,col,value\n";
    for (const auto& pt : s.points)
        for (int i = 0; i < pt.value.rows; ++i)
            for (int j = 0; j < pt.value.cols; ++j)
                out << detail::fmt17(pt.eps) << "," << detail::fmt17(pt.t) << "," << i << "," << j << ","
                    << detail::fmt17(pt.value(i, j)) << "\n";
}

inline EvalSeries read_series_csv(const std::string& file, const std::string& name) {
    std::string header;
    auto rows = detail::read_csv_numeric(file, header);
    EvalSeries s{name, {}};
    size_t i = 0;
    while (i < rows.size()) {
        double eps = rows[i][0], t = rows[i][1];
        int nr = 0, nc = 0;
        size_t j = i;
        while (j < rows.size() && rows[j][0] == eps && rows[j][1] == t) {
            nr = std::max(nr, static_cast<int>(rows[j][2]) + 1);
            nc = std::max(nc, static_cast<int>(rows[j][3]) + 1);
            ++j;
        }
        Mat m(nr, nc);
        for (size_t r = i; r < j; ++r)
            m(static_cast<int>(rows[r][2]), static_cast<int>(rows[r][3])) = rows[r][4];
        s.append(eps, t, std::move(m));
        i = j;
    }
    return s;
}

// --- controlled pairs -------------------------------------------------------

// Directory layout: x.csv, y.csv, yprime.csv, pair.json (label).
inline void save_pair(const std::string& dir, const ControlledPair& p) {
    std::filesystem::create_directories(dir);
    write_path_csv(dir + "/x.csv", p.x);
    write_path_csv(dir + "/y.csv", p.y);
    write_path_csv(dir + "/yprime.csv", p.yprime);
    nlohmann::json meta;
    meta["label"] = pair_label_name(p.label);
    std::ofstream out(dir + "/pair.json");
    if (!out) throw std::runtime_error("cannot write " + dir + "/pair.json");
    out << meta.dump(2) << "\n";
}

inline ControlledPair load_pair(const std::string& dir) {
    std::ifstream in(dir + "/pair.json");
    if (!in) throw std::runtime_error("cannot open " + dir + "/pair.json");
    nlohmann::json meta = nlohmann::json::parse(in);
    PairLabel label = pair_label_from_name(meta.at("label").get<std::string>());
    return ControlledPair(read_path_csv(dir + "/y.csv"), read_path_csv(dir + "/yprime.csv"),
                          read_path_csv(dir + "/x.csv"), label);
}

// --- enhanced paths ---------------------------------------------------------

// Directory layout: x.csv, iter.csv (node-indexed d*d rows), enh.json (flavor).
inline void save_enhanced(const std::string& dir, const EnhancedPath& e) {
    std::filesystem::create_directories(dir);
    write_path_csv(dir + "/x.csv", e.base);
    int d = e.dim();
    std::ofstream out(dir + "/iter.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/iter.csv");
    out << "k";
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out << ",i" << (i + 1) << (j + 1);
    out << "\n";
    for (int k = 0; k <= e.base.grid.steps; ++k) {
        out << k;
        Mat m = e.iterated(k);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out << "," << detail::fmt17(m(i, j));
        out << "\n";
    }
    nlohmann::json meta;
    meta["flavor"] = flavor_name(e.flavor);
    std::ofstream jm(dir + "/enh.json");
    if (!jm) throw std::runtime_error("cannot write " + dir + "/enh.json");
    jm << meta.dump(2) << "\n";
}

inline void write_blocks_csv(const std::string& file, const EnhancedPath& e,
                             const std::vector<std::pair<long, long>>& spans) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open " + file);
    out << "j,k,row,col,value\n";
    int d = e.dim();
    Mat b(d, d);
    for (const auto& [j, k] : spans) {
        e.block_into(j, k, b);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                out << j << "," << k << "," << r << "," << c << ","
                    << detail::fmt17(b(r, c)) << "\n";
    }
}

inline void write_sewing_csv(const std::string& file, const SewingResult& res, double t) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open " + file);
    out << "level,t,component,value,delta\n";
    for (std::size_t lv = 0; lv < res.level_values.size(); ++lv) {
        // level 0 has no refinement delta
        double dl = lv == 0 ? std::numeric_limits<double>::quiet_NaN() : res.deltas[lv - 1];
        const Row& v = res.level_values[lv];
        for (std::size_t c = 0; c < v.size(); ++c)
            out << lv << "," << detail::fmt17(t) << "," << c << ","
                << detail::fmt17(v[c]) << "," << detail::fmt17(dl) << "\n";
    }
}

inline EnhancedPath load_enhanced(const std::string& dir) {
    std::ifstream in(dir + "/enh.json");
    if (!in) throw std::runtime_error("cannot open " + dir + "/enh.json");
    nlohmann::json meta = nlohmann::json::parse(in);
    Flavor flavor = flavor_from_name(meta.at("flavor").get<std::string>());
    GridPath x = read_path_csv(dir + "/x.csv");
    std::string header;
    auto rows = detail::read_csv_numeric(dir + "/iter.csv", header);
    int d = x.dim;
    if (static_cast<int>(rows.size()) != x.grid.steps + 1)
        throw std::runtime_error("iter.csv row count mismatch in " + dir);
    std::vector<double> iter;
    iter.reserve(rows.size() * d * d);
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != 1 + d * d)
            throw std::runtime_error("iter.csv column count mismatch in " + dir);
        for (int c = 0; c < d * d; ++c) iter.push_back(r[1 + c]);
    }
    return EnhancedPath::from_raw(std::move(x), flavor, std::move(iter));
}

}  // namespace roughreg
