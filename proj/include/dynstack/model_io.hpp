#pragma once

// Text formats for level-1 datasets and fitted stacking models.
//
// Model file (one record per line, reals printed with 17 significant digits):
//
//   dynstack-model 1
//   kind dynamic | static
//   p <count>
//   column <provenance>          (p lines, may be absent)
//   lambda <real>                (dynamic)
//   degree <int>                 (dynamic)
//   knots <n> <real>...          (dynamic)
//   design m1|m2|m3              (static)
//   penalty none|ridge|lasso     (static)
//   strength <real>              (static)
//   coefficients <n> <real>...
//   end

#include "dynstack/error.hpp"
#include "dynstack/graph.hpp"
#include "dynstack/stacking.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace dynstack {

/// Shortest-round-trip-safe text for a double (17 significant digits).
inline std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

using StackModel = std::variant<DynamicStackModel, StaticStackModel>;

namespace detail {

inline void write_reals(std::ostream& out, const char* key, std::span<const double> xs) {
    out << key << ' ' << xs.size();
    for (double x : xs) out << ' ' << format_real(x);
    out << '\n';
}

inline void write_columns(std::ostream& out, const std::vector<std::string>& columns) {
    for (const auto& c : columns) out << "column " << c << '\n';
}

} // namespace detail

inline void write_model(std::ostream& out, const DynamicStackModel& m) {
    out << "dynstack-model 1\nkind dynamic\np " << m.p << '\n';
    detail::write_columns(out, m.columns);
    out << "lambda " << format_real(m.lambda) << '\n';
    out << "degree " << m.basis.degree() << '\n';
    detail::write_reals(out, "knots", m.basis.knots());
    detail::write_reals(out, "coefficients", std::span<const double>(m.coef.data(), static_cast<std::size_t>(m.coef.size())));
    out << "end\n";
}

inline void write_model(std::ostream& out, const StaticStackModel& m) {
    out << "dynstack-model 1\nkind static\np " << m.p << '\n';
    detail::write_columns(out, m.columns);
    out << "design " << to_string(m.design) << '\n';
    out << "penalty " << to_string(m.penalty) << '\n';
    out << "strength " << format_real(m.strength) << '\n';
    detail::write_reals(out, "coefficients", std::span<const double>(m.coef.data(), static_cast<std::size_t>(m.coef.size())));
    out << "end\n";
}

inline void write_model(std::ostream& out, const StackModel& m) {
    std::visit([&](const auto& model) { write_model(out, model); }, m);
}

inline StackModel read_model(std::istream& in) {
    std::string kind;
    std::size_t p = 0;
    bool have_p = false;
    std::vector<std::string> columns;
    double lambda = 0.0, strength = 0.0;
    int degree = -1;
    std::vector<double> knots, coefficients;
    std::string design = "m1", penalty = "none";
    bool header = false, ended = false;

    auto parse_real = [](std::size_t line, std::string_view tok) {
        auto v = detail::parse_double(tok);
        if (!v) throw ParseError(line, "expected a number, got '" + std::string(tok) + "'");
        return *v;
    };
    auto parse_count = [&](std::size_t line, std::string_view tok) {
        const double v = parse_real(line, tok);
        if (v < 0 || v != std::floor(v)) throw ParseError(line, "expected a count, got '" + std::string(tok) + "'");
        return static_cast<std::size_t>(v);
    };

    std::size_t n = 0;
    for (std::string raw; !ended && std::getline(in, raw);) {
        ++n;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto space = line.find(' ');
        const auto key = line.substr(0, space);
        const auto rest = space == std::string_view::npos ? std::string_view{} : detail::trim(line.substr(space + 1));
        const auto fields = detail::split_ws(rest);
        if (!header) {
            if (key != "dynstack-model" || rest != "1") throw ParseError(n, "not a dynstack model file (version 1)");
            header = true;
        } else if (key == "kind") {
            kind = rest;
        } else if (key == "p") {
            p = parse_count(n, rest);
            have_p = true;
        } else if (key == "column") {
            columns.emplace_back(rest);
        } else if (key == "lambda") {
            lambda = parse_real(n, rest);
        } else if (key == "degree") {
            degree = static_cast<int>(parse_count(n, rest));
        } else if (key == "design") {
            design = rest;
        } else if (key == "penalty") {
            penalty = rest;
        } else if (key == "strength") {
            strength = parse_real(n, rest);
        } else if (key == "knots" || key == "coefficients") {
            if (fields.empty()) throw ParseError(n, "missing count");
            const auto count = parse_count(n, fields[0]);
            if (fields.size() != count + 1) throw ParseError(n, "count does not match the number of values");
            auto& dest = key == "knots" ? knots : coefficients;
            dest.clear();
            for (std::size_t k = 1; k < fields.size(); ++k) dest.push_back(parse_real(n, fields[k]));
        } else if (key == "end") {
            ended = true;
        } else {
            throw ParseError(n, "unknown key '" + std::string(key) + "'");
        }
    }
    if (!header) throw ParseError(n, "empty model file");
    if (!ended) throw ParseError(n, "model file is truncated (no 'end')");
    if (!have_p) throw ParseError(n, "model file lacks 'p'");
    if (!columns.empty() && columns.size() != p) throw ParseError(n, "column count does not match p");
    Eigen::VectorXd coef = Eigen::Map<const Eigen::VectorXd>(coefficients.data(), static_cast<Eigen::Index>(coefficients.size()));

    if (kind == "dynamic") {
        DynamicStackModel m;
        m.basis = SplineBasis(degree, std::move(knots));
        m.lambda = lambda;
        m.p = p;
        m.columns = std::move(columns);
        if (static_cast<std::size_t>(coef.size()) != 1 + p * m.basis.size())
            throw ParseError(n, "coefficient count does not match 1 + p K");
        m.coef = std::move(coef);
        return m;
    }
    if (kind == "static") {
        StaticStackModel m;
        m.design = parse_static_design(design);
        m.penalty = parse_penalty(penalty);
        m.strength = strength;
        m.p = p;
        m.columns = std::move(columns);
        if (static_cast<std::size_t>(coef.size()) != static_width(m.design, p))
            throw ParseError(n, "coefficient count does not match the design");
        m.coef = std::move(coef);
        return m;
    }
    throw ParseError(n, "unknown model kind '" + kind + "'");
}

/// `y,z_1,...,z_p,u`
inline void write_level1_csv(std::ostream& out, const Level1Dataset& data) {
    out << 'y';
    for (std::size_t j = 0; j < data.p(); ++j) out << ",z_" << j + 1;
    out << ",u\n";
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out << data.y[i];
        for (Eigen::Index j = 0; j < data.Z.cols(); ++j) out << ',' << format_real(data.Z(r, j));
        out << ',' << format_real(data.u(r)) << '\n';
    }
}

inline Level1Dataset read_level1_csv(std::istream& in) {
    Level1Dataset data;
    std::vector<std::vector<double>> zs;
    std::vector<double> us;
    std::size_t p = 0;
    std::size_t n = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++n;
        const auto line = detail::trim(raw);
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(detail::trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (n == 1) {
            if (cells.size() < 2 || cells.front() != "y" || cells.back() != "u") throw ParseError(n, "expected header 'y,z_1,...,z_p,u'");
            p = cells.size() - 2;
            continue;
        }
        if (cells.size() != p + 2) throw ParseError(n, "expected " + std::to_string(p + 2) + " fields");
        const auto y = detail::parse_double(cells.front());
        if (!y || (*y != 0.0 && *y != 1.0)) throw ParseError(n, "label must be 0 or 1");
        data.y.push_back(static_cast<int>(*y));
        std::vector<double> z;
        for (std::size_t j = 0; j < p; ++j) {
            const auto v = detail::parse_double(cells[1 + j]);
            if (!v) throw ParseError(n, "non-numeric z value");
            z.push_back(*v);
        }
        zs.push_back(std::move(z));
        const auto u = detail::parse_double(cells.back());
        if (!u) throw ParseError(n, "non-numeric u value");
        us.push_back(*u);
    }
    if (n == 0) throw ParseError(0, "empty level-1 file");
    data.Z.resize(static_cast<Eigen::Index>(zs.size()), static_cast<Eigen::Index>(p));
    data.u.resize(static_cast<Eigen::Index>(us.size()));
    for (std::size_t i = 0; i < zs.size(); ++i) {
        for (std::size_t j = 0; j < p; ++j) data.Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = zs[i][j];
        data.u(static_cast<Eigen::Index>(i)) = us[i];
    }
    for (std::size_t j = 0; j < p; ++j) data.columns.push_back("z_" + std::to_string(j + 1));
    data.validate();
    return data;
}

/// Sidecar provenance: one line `z_j<TAB>description` per column.
inline void write_provenance(std::ostream& out, const Level1Dataset& data) {
    for (std::size_t j = 0; j < data.columns.size(); ++j) out << "z_" << j + 1 << '\t' << data.columns[j] << '\n';
}

inline std::vector<std::string> read_provenance(std::istream& in) {
    std::vector<std::string> cols;
    std::size_t n = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++n;
        if (detail::trim(raw).empty()) continue;
        const auto tab = raw.find('\t');
        if (tab == std::string::npos) throw ParseError(n, "expected 'z_j<TAB>description'");
        cols.push_back(std::string(detail::trim(std::string_view(raw).substr(tab + 1))));
    }
    return cols;
}

} // namespace dynstack
