// MetricsRecord series as CSV: one header row, one row per outer iteration,
// reals with 12 significant digits.
#pragma once

#include "../metrics.hpp"
#include "config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace supfbs {

inline const std::vector<std::string>& csv_columns()
{
    static const std::vector<std::string> c = {
        "k",         "residual_scaled", "tv_scaled",          "err_scaled", "objective",
        "stop_measure", "inner_iters", "cumulative_matvecs", "wall_time",
    };
    return c;
}

namespace detail {

inline void put_real(std::ostream& os, double v)
{
    if (std::isnan(v)) {
        os << "nan";
    } else if (std::isinf(v)) {
        os << (v > 0 ? "inf" : "-inf");
    } else {
        os << std::setprecision(12) << v;
    }
}

inline std::string join_header(const std::vector<std::string>& cols)
{
    std::string h;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        h += (i ? "," : "") + cols[i];
    }
    return h;
}

} // namespace detail

inline void write_csv(std::ostream& os, const std::vector<MetricsRecord>& recs)
{
    os << detail::join_header(csv_columns()) << '\n';
    for (const MetricsRecord& r : recs) {
        os << r.k << ',';
        detail::put_real(os, r.residual_scaled);
        os << ',';
        detail::put_real(os, r.tv_scaled);
        os << ',';
        detail::put_real(os, r.err_scaled);
        os << ',';
        detail::put_real(os, r.objective);
        os << ',';
        detail::put_real(os, r.stop_measure);
        os << ',' << r.inner_iters << ',' << r.cumulative_matvecs << ',';
        detail::put_real(os, r.wall_time);
        os << '\n';
    }
}

inline void save_csv(const std::string& path, const std::vector<MetricsRecord>& recs)
{
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot write " + path);
    }
    write_csv(os, recs);
    if (!os) {
        throw std::runtime_error("write failed: " + path);
    }
}

inline std::vector<MetricsRecord> parse_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || trim(line) != detail::join_header(csv_columns())) {
        throw ConfigError("csv: unexpected header");
    }
    std::vector<MetricsRecord> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(trim(cell));
        }
        if (f.size() != csv_columns().size()) {
            throw ConfigError("csv line " + std::to_string(lineno) + ": expected " +
                              std::to_string(csv_columns().size()) + " fields");
        }
        const std::string where = "csv line " + std::to_string(lineno);
        MetricsRecord r;
        r.k = static_cast<int>(detail::to_int(where, f[0]));
        r.residual_scaled = std::strtod(f[1].c_str(), nullptr);
        r.tv_scaled = std::strtod(f[2].c_str(), nullptr);
        r.err_scaled = std::strtod(f[3].c_str(), nullptr);
        r.objective = std::strtod(f[4].c_str(), nullptr);
        r.stop_measure = std::strtod(f[5].c_str(), nullptr);
        r.inner_iters = static_cast<int>(detail::to_int(where, f[6]));
        r.cumulative_matvecs = static_cast<std::uint64_t>(detail::to_int(where, f[7]));
        r.wall_time = std::strtod(f[8].c_str(), nullptr);
        out.push_back(r);
    }
    return out;
}

inline std::vector<MetricsRecord> load_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot open " + path);
    }
    return parse_csv(is);
}

/// One row of the experiment summary.
struct SummaryRow {
    std::string label;
    int outer_iterations = 0;
    bool converged = false;
    int stop_k = -1;
    MetricsRecord last;
    long inner_total = 0;
    int fallback_checks = 0;
};

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    os << "algorithm,outer_iterations,converged,stop_k,residual_scaled,tv_scaled,err_scaled,"
          "objective,stop_measure,cumulative_matvecs,inner_total,fallback_checks\n";
    for (const SummaryRow& r : rows) {
        os << r.label << ',' << r.outer_iterations << ',' << (r.converged ? 1 : 0) << ',' << r.stop_k
           << ',';
        for (double v : {r.last.residual_scaled, r.last.tv_scaled, r.last.err_scaled,
                         r.last.objective, r.last.stop_measure}) {
            detail::put_real(os, v);
            os << ',';
        }
        os << r.last.cumulative_matvecs << ',' << r.inner_total << ',' << r.fallback_checks << '\n';
    }
}

} // namespace supfbs
