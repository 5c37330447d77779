// Runs every algorithm of an ExperimentConfig from x0 = 0 and writes one CSV
// per algorithm, a summary CSV and optional SVG plots.
#pragma once

#include "config.hpp"
#include "csv.hpp"
#include "instance.hpp"
#include "svg.hpp"

#include "../fbs.hpp"
#include "../superior.hpp"

#include <filesystem>
#include <future>
#include <mutex>

namespace supfbs {

struct AlgorithmRun {
    AlgorithmSpec spec;
    std::vector<MetricsRecord> records;
    Vector x;
    int outer_iterations = 0;
    bool converged = false;
    int stop_k = -1;
    long inner_total = 0;
    int fallback_checks = 0;
    std::string csv_path;

    SummaryRow summary() const
    {
        SummaryRow r;
        r.label = spec.label;
        r.outer_iterations = outer_iterations;
        r.converged = converged;
        r.stop_k = stop_k;
        if (!records.empty()) {
            r.last = records.back();
        }
        r.inner_total = inner_total;
        r.fallback_checks = fallback_checks;
        return r;
    }
};

struct ExperimentResult {
    std::vector<AlgorithmRun> runs;
    double lambda = 0.0, eps = 0.0;
    double ref_residual = 0.0, ref_tv = 0.0;  ///< scaled values at x_true
};

/// Files written by `generate` and read back through `data_dir`.
inline void save_tomo_data(const std::string& dir, const TomoData& d)
{
    std::filesystem::create_directories(dir);
    save_matrix_market(dir + "/A.mtx", d.a);
    const Index side = d.shape().rows;
    write_raw(dir + "/x_true.raw", d.x_true, side, side);
    write_raw(dir + "/b.raw", d.b, d.b.size(), 1);
    write_raw(dir + "/b_clean.raw", d.b_clean, d.b_clean.size(), 1);
    write_pgm(dir + "/x_true.pgm", d.x_true, side, side);
}

inline TomoData load_tomo_data(const std::string& dir, bool noisy, double noise_level,
                               std::uint64_t power_seed = 0)
{
    TomoData d;
    d.a = load_matrix_market(dir + "/A.mtx");
    Index rows = 0, cols = 0;
    d.x_true = read_raw(dir + "/x_true.raw", &rows, &cols);
    if (rows != cols || d.a.cols() != rows * cols) {
        throw ConfigError(dir + ": x_true.raw is not a square image matching A");
    }
    d.b = read_raw(dir + "/b.raw");
    if (d.b.size() != d.a.rows()) {
        throw ConfigError(dir + ": b.raw length does not match A");
    }
    d.b_clean = std::filesystem::exists(dir + "/b_clean.raw") ? read_raw(dir + "/b_clean.raw") : d.b;
    d.geom.image_side = rows;
    if (noisy) {
        d.noise = NoiseModel{noise_level, 0};
    }
    d.norm_a_sq = spectral_norm_sq(d.a, 1e-10, 1000, power_seed).value;
    return d;
}

inline TomoData experiment_data(const ExperimentConfig& c)
{
    if (!c.data_dir.empty()) {
        return load_tomo_data(c.data_dir, c.noise, c.noise_level, c.power_seed);
    }
    std::optional<NoiseModel> noise;
    if (c.noise) {
        noise = NoiseModel{c.noise_level, c.noise_seed};
    }
    return make_tomo_data(default_geometry(c.side, c.n_angles, c.n_rays), c.phantom, noise,
                          c.power_seed);
}

inline AlgorithmRun run_algorithm(const AlgorithmSpec& spec, const ExperimentConfig& c,
                                  const TomoData& d)
{
    const double lambda = c.lambda.value_or(d.default_lambda());
    const Vector x0 = Vector::Zero(d.a.cols());
    AlgorithmRun run;
    run.spec = spec;
    if (spec.superiorized) {
        const SupConfig sc = resolve_sup(spec, c, d);
        const ProblemInstance prob = d.problem(lambda, c.tau, traits(spec.variant).constrained);
        SupResult r = superiorize_run(sc, prob, x0);
        run.records = std::move(r.records);
        run.x = std::move(r.x);
        run.outer_iterations = r.outer_iterations;
        run.converged = r.converged;
        run.stop_k = r.stop_k;
    } else {
        const AFBSConfig fc = resolve_fbs(spec, c);
        const ProblemInstance prob = d.problem(lambda, c.tau, spec.nonneg);
        AFBSResult r = afbs_run(fc, prob, d.norm_a_sq, x0);
        run.records = std::move(r.records);
        run.x = std::move(r.x);
        run.outer_iterations = r.outer_iterations;
        run.converged = r.converged;
        run.stop_k = r.stop_k;
        run.inner_total = r.inner_total;
        run.fallback_checks = r.fallback_checks;
    }
    return run;
}

/// File-name-safe form of an algorithm label.
inline std::string file_stem(const std::string& label)
{
    std::string s = label;
    for (char& ch : s) {
        if (ch == ':' || ch == '@' || ch == '/') {
            ch = '_';
        }
    }
    return s;
}

/// `write_files` = false runs the algorithms only.
inline ExperimentResult run_experiment(const ExperimentConfig& c, bool write_files = true)
{
    if (c.algorithms.empty()) {
        throw ConfigError("no algorithms configured");
    }
    const TomoData d = experiment_data(c);
    ExperimentResult res;
    res.lambda = c.lambda.value_or(d.default_lambda());
    res.eps = c.eps.value_or(d.default_eps());
    {
        const ProblemInstance prob = d.problem(res.lambda, c.tau, false);
        const Monitor m(prob, TerminationMode::OptU);
        const MetricsRecord ref = m.record(0, d.x_true, 0, 0);
        res.ref_residual = ref.residual_scaled;
        res.ref_tv = ref.tv_scaled;
    }
    if (write_files) {
        std::filesystem::create_directories(c.output_dir);
    }

    res.runs.resize(c.algorithms.size());
    std::mutex io;
    auto job = [&](std::size_t i) {
        AlgorithmRun run = run_algorithm(c.algorithms[i], c, d);
        if (write_files) {
            run.csv_path = c.output_dir + "/" + file_stem(run.spec.label) + ".csv";
            std::lock_guard<std::mutex> lock(io);
            save_csv(run.csv_path, run.records);
        }
        res.runs[i] = std::move(run);
    };
    if (c.jobs <= 1) {
        for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
            job(i);
        }
    } else {
        for (std::size_t start = 0; start < c.algorithms.size(); start += c.jobs) {
            std::vector<std::future<void>> batch;
            for (std::size_t i = start; i < std::min(c.algorithms.size(), start + c.jobs); ++i) {
                batch.push_back(std::async(std::launch::async, job, i));
            }
            for (auto& f : batch) {
                f.get();
            }
        }
    }

    if (!write_files) {
        return res;
    }
    std::vector<SummaryRow> rows;
    for (const auto& r : res.runs) {
        rows.push_back(r.summary());
    }
    {
        std::ofstream os(c.output_dir + "/summary.csv");
        if (!os) {
            throw std::runtime_error("cannot write " + c.output_dir + "/summary.csv");
        }
        write_summary_csv(os, rows);
    }
    if (c.write_svg) {
        struct Curve {
            const char* file;
            const char* title;
            double MetricsRecord::*field;
            std::optional<double> ref;
        };
        const Curve curves[] = {
            {"residual.svg", "scaled squared residual", &MetricsRecord::residual_scaled,
             res.ref_residual},
            {"tv.svg", "scaled smoothed TV", &MetricsRecord::tv_scaled, res.ref_tv},
            {"error.svg", "scaled squared error", &MetricsRecord::err_scaled, std::nullopt},
        };
        for (const Curve& cv : curves) {
            std::vector<PlotSeries> series;
            for (const auto& r : res.runs) {
                PlotSeries s;
                s.label = r.spec.label;
                for (const auto& rec : r.records) {
                    s.x.push_back(rec.k);
                    s.y.push_back(rec.*cv.field);
                }
                series.push_back(std::move(s));
            }
            PlotSpec spec;
            spec.title = cv.title;
            spec.y_label = cv.title;
            spec.log_y = c.log_y;
            spec.reference = cv.ref;
            save_svg(c.output_dir + "/" + cv.file, spec, series);
        }
    }
    return res;
}

} // namespace supfbs
