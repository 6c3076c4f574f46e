#pragma once

// Plain CSV readers/writers for traces, TAS matrices and S11 sweeps.
// Values are written with 17 significant digits so a write/read cycle is exact.

#include <charconv>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "zfmaser/error.hpp"
#include "zfmaser/spectro.hpp"
#include "zfmaser/units.hpp"

namespace zfmaser::csv {

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double number(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (!s.empty() && *b == '+') ++b;
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v))
        throw InvalidInput("csv line " + std::to_string(line_no) + ": not a finite number: '" + s + "'");
    return v;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Non-empty, non-comment lines with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> lines(std::istream& in) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        out.emplace_back(no, line);
    }
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open '" + path + "'");
    return f;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InvalidInput("cannot write '" + path + "'");
    return f;
}

}  // namespace detail

/// Seconds per unit of a time column header (t_s, t_ms, t_us, t_ns, t_ps).
inline double time_header_scale(const std::string& h) {
    if (h == "t_s") return 1.0;
    if (h == "t_ms") return 1e-3;
    if (h == "t_us") return 1e-6;
    if (h == "t_ns") return 1e-9;
    if (h == "t_ps") return 1e-12;
    throw InvalidInput("csv: first header must be a time column (t_s, t_ms, t_us, t_ns or t_ps), got '" + h + "'");
}

/// Two-column trace; the header names the time unit, e.g. `t_us,value`.
inline TimeTrace read_trace(std::istream& in, Unit unit) {
    const auto rows = detail::lines(in);
    if (rows.empty()) throw InvalidInput("csv: empty trace file");
    const auto head = detail::split(rows[0].second);
    if (head.size() != 2) throw InvalidInput("csv line " + std::to_string(rows[0].first) + ": expected 2 columns");
    const double scale = time_header_scale(head[0]);
    std::vector<double> t, y;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto c = detail::split(rows[i].second);
        if (c.size() != 2) throw InvalidInput("csv line " + std::to_string(rows[i].first) + ": expected 2 columns");
        t.push_back(detail::number(c[0], rows[i].first) * scale);
        y.push_back(detail::number(c[1], rows[i].first));
    }
    return {std::move(t), std::move(y), unit};
}

inline TimeTrace read_trace(const std::string& path, Unit unit) {
    auto f = detail::open_in(path);
    return read_trace(f, unit);
}

inline void write_trace(std::ostream& out, const TimeTrace& tr, const std::string& time_header = "t_us",
                        const std::string& value_header = "value") {
    const double scale = time_header_scale(time_header);
    out << time_header << ',' << value_header << '\n';
    for (std::size_t i = 0; i < tr.size(); ++i)
        out << detail::fmt(tr.t()[i] / scale) << ',' << detail::fmt(tr.y()[i]) << '\n';
}

inline void write_trace(const std::string& path, const TimeTrace& tr, const std::string& time_header = "t_us",
                        const std::string& value_header = "value") {
    auto f = detail::open_out(path);
    write_trace(f, tr, time_header, value_header);
}

/// Generic table: header plus columns of equal length.
inline void write_table(std::ostream& out, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size()) throw InvalidInput("write_table: header/column count mismatch");
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    const std::size_t n = columns.empty() ? 0 : columns[0].size();
    for (const auto& c : columns)
        if (c.size() != n) throw InvalidInput("write_table: columns differ in length");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << detail::fmt(columns[j][i]);
        out << '\n';
    }
}

inline void write_table(const std::string& path, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& columns) {
    auto f = detail::open_out(path);
    write_table(f, header, columns);
}

/// TAS matrix: first row is `delay_ps,<wavelengths...>`, then one row per delay.
inline SpectrumMatrix read_matrix(std::istream& in) {
    const auto rows = detail::lines(in);
    if (rows.size() < 3) throw InvalidInput("csv: matrix needs a wavelength row and at least two delays");
    const auto head = detail::split(rows[0].second);
    if (head.size() < 3) throw InvalidInput("csv: matrix needs at least two wavelengths");
    std::vector<double> wl;
    for (std::size_t j = 1; j < head.size(); ++j) wl.push_back(detail::number(head[j], rows[0].first));
    std::vector<double> delays;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(wl.size()), static_cast<Eigen::Index>(rows.size() - 1));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto c = detail::split(rows[i].second);
        if (c.size() != head.size())
            throw InvalidInput("csv line " + std::to_string(rows[i].first) + ": expected " +
                               std::to_string(head.size()) + " columns");
        delays.push_back(detail::number(c[0], rows[i].first));
        for (std::size_t j = 1; j < c.size(); ++j)
            a(static_cast<Eigen::Index>(j - 1), static_cast<Eigen::Index>(i - 1)) = detail::number(c[j], rows[i].first);
    }
    return {std::move(wl), std::move(delays), std::move(a)};
}

inline SpectrumMatrix read_matrix(const std::string& path) {
    auto f = detail::open_in(path);
    return read_matrix(f);
}

inline void write_matrix(std::ostream& out, const SpectrumMatrix& m) {
    out << "delay_ps";
    for (double w : m.wavelengths()) out << ',' << detail::fmt(w);
    out << '\n';
    for (std::size_t j = 0; j < m.delays().size(); ++j) {
        out << detail::fmt(m.delays()[j]);
        for (Eigen::Index i = 0; i < m.delta_a().rows(); ++i)
            out << ',' << detail::fmt(m.delta_a()(i, static_cast<Eigen::Index>(j)));
        out << '\n';
    }
}

inline void write_matrix(const std::string& path, const SpectrumMatrix& m) {
    auto f = detail::open_out(path);
    write_matrix(f, m);
}

struct S11Sweep {
    std::vector<double> f_hz;
    std::vector<std::complex<double>> s11;
};

/// Raw reflection sweep: `f_Hz,re_S11,im_S11`.
inline S11Sweep read_s11(std::istream& in) {
    const auto rows = detail::lines(in);
    if (rows.empty()) throw InvalidInput("csv: empty S11 file");
    const auto head = detail::split(rows[0].second);
    if (head.size() != 3 || head[0] != "f_Hz")
        throw InvalidInput("csv: S11 header must be f_Hz,re_S11,im_S11");
    S11Sweep s;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto c = detail::split(rows[i].second);
        if (c.size() != 3) throw InvalidInput("csv line " + std::to_string(rows[i].first) + ": expected 3 columns");
        s.f_hz.push_back(detail::number(c[0], rows[i].first));
        s.s11.emplace_back(detail::number(c[1], rows[i].first), detail::number(c[2], rows[i].first));
    }
    return s;
}

inline S11Sweep read_s11(const std::string& path) {
    auto f = detail::open_in(path);
    return read_s11(f);
}

}  // namespace zfmaser::csv
