// supfbs: generate tomography data, run and sweep experiments, compare CSVs.
//
// Exit status: 0 success, 2 configuration or I/O error, 3 numerical failure.

#include <supfbs/harness/experiment.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

namespace {

using namespace supfbs;

ExperimentConfig build_config(const std::string& file, const std::vector<std::string>& sets)
{
    ExperimentConfig c;
    if (!file.empty()) {
        c = load_config(file);
    }
    for (const auto& kv : sets) {
        apply_override(c, kv);
    }
    return c;
}

void print_summary(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    os << std::left << std::setw(28) << "algorithm" << std::right << std::setw(7) << "outer"
       << std::setw(7) << "stop" << std::setw(15) << "residual" << std::setw(15) << "tv"
       << std::setw(15) << "err" << std::setw(15) << "objective" << std::setw(12) << "matvecs"
       << '\n';
    for (const auto& r : rows) {
        os << std::left << std::setw(28) << r.label << std::right << std::setw(7)
           << r.outer_iterations << std::setw(7) << r.stop_k << std::setprecision(6)
           << std::setw(15) << r.last.residual_scaled << std::setw(15) << r.last.tv_scaled
           << std::setw(15) << r.last.err_scaled << std::setw(15) << r.last.objective
           << std::setw(12) << r.last.cumulative_matvecs << '\n';
    }
}

std::vector<SummaryRow> summaries(const ExperimentResult& res)
{
    std::vector<SummaryRow> rows;
    for (const auto& r : res.runs) {
        rows.push_back(r.summary());
    }
    return rows;
}

int cmd_generate(const std::string& cfg_file, const std::vector<std::string>& sets,
                 const std::string& out)
{
    ExperimentConfig c = build_config(cfg_file, sets);
    c.data_dir.clear();
    const TomoData d = experiment_data(c);
    save_tomo_data(out, d);
    std::cout << "wrote " << out << ": " << d.a.rows() << " x " << d.a.cols() << " matrix, "
              << d.a.nonzeros() << " nonzeros, ||A||^2 = " << std::setprecision(8) << d.norm_a_sq
              << (d.noisy() ? ", noisy sinogram\n" : ", exact sinogram\n");
    return 0;
}

int cmd_run(const std::string& cfg_file, const std::vector<std::string>& sets, const std::string& out)
{
    ExperimentConfig c = build_config(cfg_file, sets);
    if (!out.empty()) {
        c.output_dir = out;
    }
    const ExperimentResult res = run_experiment(c);
    std::cout << "lambda = " << res.lambda << ", eps = " << res.eps << ", output in " << c.output_dir
              << "\n";
    print_summary(std::cout, summaries(res));
    return 0;
}

int cmd_sweep(const std::string& cfg_file, const std::vector<std::string>& sets,
              const std::string& out, const std::string& key, const std::vector<std::string>& values)
{
    ExperimentConfig base = build_config(cfg_file, sets);
    if (!out.empty()) {
        base.output_dir = out;
    }
    if (values.empty()) {
        throw ConfigError("sweep: no values given");
    }
    std::filesystem::create_directories(base.output_dir);
    std::ofstream os(base.output_dir + "/sweep.csv");
    if (!os) {
        throw std::runtime_error("cannot write " + base.output_dir + "/sweep.csv");
    }
    os << key << ',';
    bool header = true;
    for (const auto& v : values) {
        ExperimentConfig c = base;
        apply_setting(c, key, v);
        c.output_dir = base.output_dir + "/" + file_stem(key + "=" + v);
        const ExperimentResult res = run_experiment(c);
        std::ostringstream block;
        write_summary_csv(block, summaries(res));
        std::string line;
        std::istringstream in(block.str());
        std::getline(in, line);
        if (header) {
            os << line << '\n';
            header = false;
        }
        while (std::getline(in, line)) {
            os << v << ',' << line << '\n';
        }
        std::cout << key << " = " << v << "\n";
        print_summary(std::cout, summaries(res));
    }
    return 0;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& out)
{
    std::vector<SummaryRow> rows;
    for (const auto& f : files) {
        const auto recs = load_csv(f);
        SummaryRow r;
        r.label = std::filesystem::path(f).stem().string();
        if (!recs.empty()) {
            r.last = recs.back();
            r.outer_iterations = recs.back().k;
            for (const auto& rec : recs) {
                r.inner_total += rec.inner_iters;
            }
        }
        rows.push_back(r);
    }
    print_summary(std::cout, rows);
    if (!out.empty()) {
        std::ofstream os(out);
        if (!os) {
            throw std::runtime_error("cannot write " + out);
        }
        write_summary_csv(os, rows);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Superiorization and accelerated inexact FBS for TV tomography"};
    app.require_subcommand(1);

    std::string cfg_file, out;
    std::vector<std::string> sets;
    auto common = [&](CLI::App* sub) {
        sub->add_option("config", cfg_file, "configuration file")->check(CLI::ExistingFile);
        sub->add_option("-s,--set", sets, "override a setting, key=value (repeatable)");
    };

    auto* gen = app.add_subcommand("generate", "write phantom, matrix and sinogram files");
    common(gen);
    gen->add_option("-o,--out", out, "output directory")->required();

    auto* run = app.add_subcommand("run", "run an experiment");
    common(run);
    run->add_option("-o,--out", out, "output directory (overrides output_dir)");

    std::string key;
    std::vector<std::string> values;
    auto* sweep = app.add_subcommand("sweep", "run an experiment for each value of one setting");
    common(sweep);
    sweep->add_option("-o,--out", out, "output directory (overrides output_dir)");
    sweep->add_option("-p,--param", key, "setting to vary, e.g. afbs:natural:pd_noinv.q")->required();
    sweep->add_option("-v,--values", values, "values, comma separated")->required()->delimiter(',');

    std::vector<std::string> files;
    auto* cmp = app.add_subcommand("compare", "summarize metric CSVs side by side");
    cmp->add_option("files", files, "CSV files")->required()->check(CLI::ExistingFile);
    cmp->add_option("-o,--out", out, "also write the table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*gen) {
            return cmd_generate(cfg_file, sets, out);
        }
        if (*run) {
            return cmd_run(cfg_file, sets, out);
        }
        if (*sweep) {
            return cmd_sweep(cfg_file, sets, out, key, values);
        }
        return cmd_compare(files, out);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
