#include "test_support.hpp"

#include <supfbs/harness/config.hpp>
#include <supfbs/harness/csv.hpp>
#include <supfbs/harness/experiment.hpp>
#include <supfbs/harness/svg.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace supfbs;
using testsupport::random_vector;

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int count_lines(const std::string& s)
{
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

std::string temp_dir(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("supfbs_test_" + name);
    std::filesystem::remove_all(p);
    return p.string();
}

ExperimentConfig small_config(const std::string& out)
{
    ExperimentConfig c;
    std::istringstream is("side = 16\nangles = 6\nrays = 16\nmax_outer = 5\n"
                          "algorithms = GradSupCG, ProxSupLW, afbs:natural:exact, fbs:natural:pd_noinv:nonneg\n");
    parse_config(is, c);
    c.output_dir = out;
    return c;
}

MetricsRecord sample_record(int k, std::mt19937_64& rng)
{
    MetricsRecord r;
    r.k = k;
    const Vector v = random_vector(6, rng, 0.0, 1.0);
    r.residual_scaled = v[0] * 1e3;
    r.tv_scaled = v[1] / 7.0;
    r.err_scaled = v[2] * 1e-9;
    r.objective = std::exp(30.0 * v[3]);
    r.stop_measure = v[4];
    r.inner_iters = 17 * k;
    r.cumulative_matvecs = 123456789012ull + k;
    r.wall_time = v[5];
    return r;
}

} // namespace

// --- configuration ---------------------------------------------------------------

TEST(Config, ParsesSettingsCommentsAndOverrides)
{
    std::istringstream is(R"(# experiment
side = 64
angles=10   # inline comment
rays = 64
noise = on
noise_level = 0.03
noise_seed = 7
lambda = 0.5
max_outer = 40
GradSupCG.gamma0 = 0.002
algorithms = GradSupCG, afbs:natural:pd_noinv@q12
afbs:natural:pd_noinv@q12.q = 1.2
)");
    ExperimentConfig c;
    parse_config(is, c);
    EXPECT_EQ(c.side, 64);
    EXPECT_EQ(c.n_angles, 10u);
    EXPECT_TRUE(c.noise);
    EXPECT_DOUBLE_EQ(c.noise_level, 0.03);
    EXPECT_EQ(c.noise_seed, 7u);
    EXPECT_DOUBLE_EQ(*c.lambda, 0.5);
    EXPECT_FALSE(c.eps.has_value());
    ASSERT_EQ(c.algorithms.size(), 2u);
    EXPECT_EQ(c.algorithms[0].overrides.at("gamma0"), "0.002");
    EXPECT_FALSE(c.algorithms[1].superiorized);
    EXPECT_EQ(c.algorithms[1].inner, InnerSolver::PDNoInv);
    EXPECT_EQ(c.algorithms[1].overrides.at("q"), "1.2");

    apply_override(c, "max_outer=3");
    apply_override(c, "GradSupCG.kappa=5");
    EXPECT_EQ(c.max_outer, 3);
    EXPECT_EQ(c.algorithms[0].overrides.at("kappa"), "5");
    EXPECT_EQ(resolve_fbs(c.algorithms[1], c).inexact_q, 1.2);
    EXPECT_EQ(resolve_fbs(c.algorithms[1], c).max_outer, 3);
}

TEST(Config, Errors)
{
    ExperimentConfig c;
    EXPECT_THROW(apply_setting(c, "sides", "3"), ConfigError);
    EXPECT_THROW(apply_setting(c, "side", "3x"), ConfigError);
    EXPECT_THROW(apply_setting(c, "side", "1"), ConfigError);
    EXPECT_THROW(apply_setting(c, "tau", "0"), ConfigError);
    EXPECT_THROW(apply_setting(c, "noise", "maybe"), ConfigError);
    EXPECT_THROW(apply_setting(c, "GradSupCG.a", "0.5"), ConfigError);
    apply_setting(c, "algorithms", "GradSupCG");
    EXPECT_THROW(apply_setting(c, "GradSupCG.q", "2"), ConfigError);
    EXPECT_THROW(apply_setting(c, "GradSupCG.a", "x"), ConfigError);
    EXPECT_THROW(apply_setting(c, "algorithms", "GradSupCG, GradSupCG"), ConfigError);
    EXPECT_THROW(apply_override(c, "side"), ConfigError);
    std::istringstream bad("side 12\n");
    EXPECT_THROW(parse_config(bad, c), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/supfbs.cfg"), ConfigError);
}

TEST(Config, AlgorithmSpecs)
{
    for (SupVariant v : all_variants()) {
        const AlgorithmSpec a = parse_algorithm(traits(v).name);
        EXPECT_TRUE(a.superiorized);
        EXPECT_EQ(a.variant, v);
    }
    const AlgorithmSpec f = parse_algorithm("fbs:reversed:tv_prox:nonneg");
    EXPECT_FALSE(f.superiorized);
    EXPECT_FALSE(f.accelerated);
    EXPECT_TRUE(f.nonneg);
    EXPECT_EQ(f.splitting, SplittingKind::ReversedTV);
    EXPECT_EQ(parse_algorithm("GradSupLW@b").variant, SupVariant::GradSupLW);
    EXPECT_THROW(parse_algorithm("afbs:natural:tv_prox"), ConfigError);
    EXPECT_THROW(parse_algorithm("afbs:reversed:exact"), ConfigError);
    EXPECT_THROW(parse_algorithm("afbs:natural"), ConfigError);
    EXPECT_THROW(parse_algorithm("SupCG"), ConfigError);
    EXPECT_THROW(parse_algorithm("afbs:natural:exact:positive"), ConfigError);
}

TEST(Config, DefaultParameterTable)
{
    const double lam = 0.01, na2 = 2500.0;
    SupConfig c = sup_defaults(SupVariant::GradSupCG, lam, na2);
    EXPECT_EQ(c.a, 1.0 - 1e-4);
    EXPECT_EQ(c.gamma0, 0.001);
    EXPECT_EQ(c.kappa, 20);
    EXPECT_DOUBLE_EQ(c.mu, 1e-6 * na2);
    c = sup_defaults(SupVariant::GradSupLW, lam, na2);
    EXPECT_EQ(c.gamma0, 0.0025);
    EXPECT_DOUBLE_EQ(c.lw_gamma, 1.9 / na2);
    EXPECT_EQ(sup_defaults(SupVariant::GradSupProjLW, lam, na2).gamma0, 0.0025);
    for (SupVariant v : {SupVariant::ProxSupCG, SupVariant::ProxSupLW}) {
        c = sup_defaults(v, lam, na2);
        EXPECT_EQ(c.gamma0, 0.001);
        EXPECT_EQ(c.a, 1.0 - 1e-6);
    }
    for (SupVariant v : {SupVariant::ProxCSupCG, SupVariant::ProxCSupLW, SupVariant::ProxSupProjLW}) {
        c = sup_defaults(v, lam, na2);
        EXPECT_DOUBLE_EQ(c.gamma0, 1.9 * lam / na2);
        EXPECT_EQ(c.a, 1.0 - 1e-6);
    }
}

// --- CSV and SVG ---------------------------------------------------------------------

TEST(Csv, HeaderOnlyAndLineCount)
{
    std::ostringstream empty;
    write_csv(empty, {});
    EXPECT_EQ(empty.str(),
              "k,residual_scaled,tv_scaled,err_scaled,objective,stop_measure,inner_iters,"
              "cumulative_matvecs,wall_time\n");
    std::mt19937_64 rng(1);
    std::ostringstream three;
    write_csv(three, {sample_record(0, rng), sample_record(1, rng), sample_record(2, rng)});
    EXPECT_EQ(count_lines(three.str()), 4);
}

TEST(Csv, RoundTripTwelveDigits)
{
    std::mt19937_64 rng(2);
    std::vector<MetricsRecord> recs;
    for (int k = 0; k < 50; ++k) {
        recs.push_back(sample_record(k, rng));
    }
    recs[3].err_scaled = NAN;
    std::stringstream ss;
    write_csv(ss, recs);
    const auto back = parse_csv(ss);
    ASSERT_EQ(back.size(), recs.size());
    auto close = [](double a, double b) {
        return (std::isnan(a) && std::isnan(b)) || std::abs(a - b) <= 5e-12 * std::abs(a);
    };
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(back[i].k, recs[i].k);
        EXPECT_TRUE(close(back[i].residual_scaled, recs[i].residual_scaled));
        EXPECT_TRUE(close(back[i].tv_scaled, recs[i].tv_scaled));
        EXPECT_TRUE(close(back[i].err_scaled, recs[i].err_scaled));
        EXPECT_TRUE(close(back[i].objective, recs[i].objective));
        EXPECT_TRUE(close(back[i].stop_measure, recs[i].stop_measure));
        EXPECT_TRUE(close(back[i].wall_time, recs[i].wall_time));
        EXPECT_EQ(back[i].inner_iters, recs[i].inner_iters);
        EXPECT_EQ(back[i].cumulative_matvecs, recs[i].cumulative_matvecs);
    }
    std::istringstream bad("k,x\n1,2\n");
    EXPECT_THROW(parse_csv(bad), ConfigError);
}

TEST(Svg, PolylinesAndReferenceLine)
{
    PlotSeries s{"run", {0, 1, 2, 3}, {1.0, 0.1, 0.0, 0.01}};
    PlotSpec spec;
    spec.title = "a < b";
    spec.reference = 0.05;
    std::ostringstream os;
    write_svg(os, spec, {s});
    const std::string out = os.str();
    EXPECT_EQ(out.rfind("<svg", 0), 0u);
    EXPECT_NE(out.find("</svg>"), std::string::npos);
    EXPECT_NE(out.find("a &lt; b"), std::string::npos);
    EXPECT_NE(out.find("stroke-dasharray"), std::string::npos);
    // the zero is dropped on the log scale: three points remain
    const auto a = out.find("points=\""), b = out.find('"', a + 8);
    const std::string pts = out.substr(a + 8, b - a - 8);
    EXPECT_EQ(std::count(pts.begin(), pts.end(), ','), 3);
    spec.log_y = false;
    std::ostringstream lin;
    write_svg(lin, spec, {s});
    const auto c = lin.str().find("points=\""), d = lin.str().find('"', c + 8);
    const std::string pts2 = lin.str().substr(c + 8, d - c - 8);
    EXPECT_EQ(std::count(pts2.begin(), pts2.end(), ','), 4);
}

// --- termination rules ----------------------------------------------------------------

TEST(Termination, ReferenceMinimizerPassesOptU)
{
    const TomoData d = make_tomo_data(default_geometry(8, 4, 8));
    const ProblemInstance prob = d.problem(0.01, 0.01, false);
    AFBSConfig c;
    c.run_past_stop = true;
    c.max_outer = 20000;
    const AFBSResult r = afbs_run(c, prob, d.norm_a_sq, Vector::Zero(64));
    EXPECT_TRUE(check_termination(prob, r.x, TerminationMode::OptU, 0.0));
    EXPECT_LE(termination_measure(prob, r.x, TerminationMode::OptU), 1e-6);
    EXPECT_FALSE(check_termination(prob, Vector::Zero(64), TerminationMode::OptU, 0.0));
}

TEST(Termination, SupRulesAtZero)
{
    const TomoData d = make_tomo_data(default_geometry(8, 4, 8));
    const ProblemInstance prob = d.problem(0.01, 0.01, false);
    const Vector x0 = Vector::Zero(64);
    const double g0 = 0.5 * d.b.squaredNorm();
    ASSERT_GT(g0, 0.0);
    EXPECT_FALSE(check_termination(prob, x0, TerminationMode::SupU, 0.99 * g0));
    EXPECT_TRUE(check_termination(prob, x0, TerminationMode::SupU, g0));
    Vector xneg = x0;
    xneg[5] = -1e-7;
    EXPECT_TRUE(check_termination(prob, xneg, TerminationMode::SupU, 1.01 * g0));
    EXPECT_FALSE(check_termination(prob, xneg, TerminationMode::SupC, 1e30));
    xneg[5] = -1e-9;
    EXPECT_TRUE(check_termination(prob, xneg, TerminationMode::SupC, 1e30));
}

TEST(Termination, KKTPointPassesOptC)
{
    // with A = I the data b can be chosen to make any gradient pattern exact
    const GridShape g{4, 4};
    const SparseOperator eye = SparseOperator::identity(16);
    std::mt19937_64 rng(3);
    Vector x = random_vector(16, rng, 0.0, 1.0);
    Vector gw = Vector::Zero(16);
    for (Index i = 0; i < 16; i += 3) {
        x[i] = 0.0;
        gw[i] = 0.5 + 0.1 * static_cast<double>(i);
    }
    ProblemInstance p;
    p.a = &eye;
    p.shape = g;
    p.tv = {0.01, 0.3};
    p.nonneg = true;
    p.b = x + p.tv.lambda * tv_smooth_grad(g, p.tv, x) - gw;
    EXPECT_LE((objective_u_grad(p, x) - gw).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_TRUE(check_termination(p, x, TerminationMode::OptC, 0.0));
    EXPECT_FALSE(check_termination(p, x, TerminationMode::OptU, 0.0));
    Vector y = x;
    y[0] = 0.01;
    EXPECT_FALSE(check_termination(p, y, TerminationMode::OptC, 0.0));
}

// --- experiments ------------------------------------------------------------------------

TEST(Experiment, ZeroIterationsGiveHeaderAndFirstRecord)
{
    ExperimentConfig c = small_config(temp_dir("zero"));
    c.max_outer = 0;
    const ExperimentResult r = run_experiment(c);
    ASSERT_EQ(r.runs.size(), 4u);
    for (const auto& run : r.runs) {
        const std::string text = slurp(run.csv_path);
        EXPECT_EQ(count_lines(text), 2) << run.spec.label;
        EXPECT_NE(text.find("\n0,"), std::string::npos);
    }
    EXPECT_EQ(count_lines(slurp(c.output_dir + "/summary.csv")), 5);
    EXPECT_TRUE(std::filesystem::exists(c.output_dir + "/residual.svg"));
    EXPECT_TRUE(std::filesystem::exists(c.output_dir + "/tv.svg"));
    EXPECT_TRUE(std::filesystem::exists(c.output_dir + "/error.svg"));
}

TEST(Experiment, FixedSeedIsByteIdentical)
{
    ExperimentConfig a = small_config(temp_dir("det_a"));
    a.noise = true;
    a.noise_seed = 42;
    ExperimentConfig b = a;
    b.output_dir = temp_dir("det_b");
    const ExperimentResult ra = run_experiment(a);
    const ExperimentResult rb = run_experiment(b);
    for (std::size_t i = 0; i < ra.runs.size(); ++i) {
        EXPECT_EQ(slurp(ra.runs[i].csv_path), slurp(rb.runs[i].csv_path));
    }
    EXPECT_EQ(slurp(a.output_dir + "/summary.csv"), slurp(b.output_dir + "/summary.csv"));
    ExperimentConfig other = a;
    other.noise_seed = 43;
    other.output_dir = temp_dir("det_c");
    const ExperimentResult rc = run_experiment(other);
    EXPECT_NE(slurp(ra.runs[0].csv_path), slurp(rc.runs[0].csv_path));
}

TEST(Experiment, LoggedMetricsMatchRecomputation)
{
    ExperimentConfig c = small_config(temp_dir("recompute"));
    c.noise = true;
    c.max_outer = 12;
    const TomoData d = experiment_data(c);
    const ExperimentResult r = run_experiment(c);
    for (const auto& run : r.runs) {
        const auto recs = load_csv(run.csv_path);
        ASSERT_FALSE(recs.empty());
        const double m = static_cast<double>(d.b.size());
        const double want = (d.a.matvec(run.x) - d.b).squaredNorm() / (2.0 * m);
        EXPECT_NEAR(recs.back().residual_scaled, want, 1e-10 * std::max(1.0, want)) << run.spec.label;
        for (const auto& rec : recs) {
            EXPECT_TRUE(std::isfinite(rec.residual_scaled) && rec.residual_scaled >= 0.0);
            EXPECT_TRUE(std::isfinite(rec.tv_scaled) && std::isfinite(rec.err_scaled));
        }
    }
}

TEST(Experiment, DataDirectoryRoundTrip)
{
    const std::string dir = temp_dir("data");
    const TomoData d = make_tomo_data(default_geometry(16, 6, 16), PhantomVariant::Modified,
                                      NoiseModel{0.02, 5});
    save_tomo_data(dir, d);
    const TomoData e = load_tomo_data(dir, true, 0.02);
    EXPECT_EQ(e.x_true, d.x_true);
    EXPECT_EQ(e.b, d.b);
    EXPECT_EQ(e.b_clean, d.b_clean);
    EXPECT_EQ(e.a.rows(), d.a.rows());
    EXPECT_LE((e.a.matvec(d.x_true) - d.b_clean).norm(), 1e-12);
    EXPECT_NEAR(e.norm_a_sq, d.norm_a_sq, 1e-8 * d.norm_a_sq);
    EXPECT_DOUBLE_EQ(e.default_eps(), d.default_eps());
}

TEST(Experiment, GradSupCGErrorDecreasesOnFullInstance)
{
    ExperimentConfig c;
    apply_setting(c, "algorithms", "GradSupCG");
    c.max_outer = 100;
    c.run_past_stop = true;
    const ExperimentResult r = run_experiment(c, false);
    const auto& recs = r.runs[0].records;
    ASSERT_EQ(recs.size(), 101u);
    for (int k = 1; k < 100; ++k) {
        EXPECT_LE(recs[k + 1].err_scaled, recs[k].err_scaled) << "k=" << k;
    }
}
