// Tomography test data: system matrix, phantom, clean and noisy sinograms.
#pragma once

#include "../metrics.hpp"
#include "../spectral.hpp"
#include "../tomo.hpp"

#include <optional>

namespace supfbs {

struct TomoData {
    Geometry geom;
    SparseOperator a;
    Vector x_true;
    Vector b_clean;
    Vector b;             ///< b_clean, plus noise when `noise` is set
    std::optional<NoiseModel> noise;
    double norm_a_sq = 0.0;

    GridShape shape() const { return {geom.image_side, geom.image_side}; }
    bool noisy() const { return noise.has_value() && noise->relative_level > 0.0; }

    /// Default proximity target: 0.001 for exact data, 0.047 m for noisy data.
    double default_eps() const { return noisy() ? 0.047 * static_cast<double>(b.size()) : 0.001; }
    /// Default TV weight: 0.01 for exact data, 1.6529 for noisy data.
    double default_lambda() const { return noisy() ? 1.6529 : 0.01; }

    /// Problem instance referring to this data set (which must outlive it).
    ProblemInstance problem(double lambda, double tau, bool nonneg) const
    {
        ProblemInstance p;
        p.a = &a;
        p.b = b;
        p.shape = shape();
        p.tv = {tau, lambda};
        p.nonneg = nonneg;
        p.x_true = x_true;
        return p;
    }
};

inline TomoData make_tomo_data(const Geometry& geom, PhantomVariant phantom = PhantomVariant::Modified,
                               std::optional<NoiseModel> noise = std::nullopt,
                               std::uint64_t power_seed = 0)
{
    TomoData d;
    d.geom = geom;
    d.a = build_parallel_system(geom);
    d.x_true = shepp_logan(geom.image_side, phantom);
    d.b_clean = d.a.matvec(d.x_true);
    d.noise = noise;
    d.b = noise ? add_noise(d.b_clean, *noise) : d.b_clean;
    d.norm_a_sq = spectral_norm_sq(d.a, 1e-10, 1000, power_seed).value;
    return d;
}

} // namespace supfbs
