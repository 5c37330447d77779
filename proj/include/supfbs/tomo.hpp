// Test data for the tomography experiment: Shepp-Logan phantom, a parallel-beam
// system matrix built by Siddon line tracing, and Gaussian measurement noise.
#pragma once

#include "linalg.hpp"
#include "sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace supfbs {

struct Geometry {
    Index image_side = 128;
    Index n_rays = 128;          ///< rays per angle
    std::vector<double> angles;  ///< degrees, strictly increasing in [0, 180)

    Index rows() const { return static_cast<Index>(angles.size()) * n_rays; }
    Index cols() const { return image_side * image_side; }

    void validate() const
    {
        require(image_side >= 2, "Geometry: image_side must be >= 2");
        require(n_rays >= 1, "Geometry: n_rays must be >= 1");
        require(!angles.empty(), "Geometry: no angles");
        for (std::size_t i = 0; i < angles.size(); ++i) {
            require(angles[i] >= 0.0 && angles[i] < 180.0, "Geometry: angle outside [0, 180)");
            require(i == 0 || angles[i] > angles[i - 1], "Geometry: angles must increase strictly");
        }
    }
};

/// `count` angles starting at `first` degrees with spacing 180/count.
inline std::vector<double> uniform_angles(std::size_t count, double first = 1.0)
{
    std::vector<double> a(count);
    for (std::size_t k = 0; k < count; ++k) {
        a[k] = first + 180.0 * static_cast<double>(k) / static_cast<double>(count);
    }
    return a;
}

/// The 128 x 128 setup: 20 angles from 1 degree, 128 rays each, m = 2560.
inline Geometry default_geometry(Index side = 128, std::size_t n_angles = 20, Index n_rays = 128)
{
    return {side, n_rays, uniform_angles(n_angles)};
}

enum class PhantomVariant { Modified, Original };

namespace detail {

struct Ellipse {
    double intensity, a, b, x0, y0, phi_deg;
};

inline std::vector<Ellipse> shepp_logan_table(PhantomVariant v)
{
    std::vector<Ellipse> e = {
        {1.0, .69, .92, 0, 0, 0},         {-.8, .6624, .8740, 0, -.0184, 0},
        {-.2, .1100, .3100, .22, 0, -18}, {-.2, .1600, .4100, -.22, 0, 18},
        {.1, .2100, .2500, 0, .35, 0},    {.1, .0460, .0460, 0, .1, 0},
        {.1, .0460, .0460, 0, -.1, 0},    {.1, .0460, .0230, -.08, -.605, 0},
        {.1, .0230, .0230, 0, -.606, 0},  {.1, .0230, .0460, .06, -.605, 0},
    };
    if (v == PhantomVariant::Original) {
        const double orig[] = {1.0, -.98, -.02, -.02, .01, .01, .01, .01, .01, .01};
        for (std::size_t i = 0; i < e.size(); ++i) {
            e[i].intensity = orig[i];
        }
    }
    return e;
}

} // namespace detail

/// Shepp-Logan head phantom on a side x side grid, row-major with row 0 at the top.
/// Pixel centers are mapped to [-1, 1]^2 as in MATLAB's phantom(); a pixel takes
/// the summed intensity of every ellipse containing its center.
inline Vector shepp_logan(Index side, PhantomVariant variant = PhantomVariant::Modified)
{
    require(side >= 2, "shepp_logan: side must be >= 2");
    const auto table = detail::shepp_logan_table(variant);
    const double h = 0.5 * static_cast<double>(side - 1);
    Vector img = Vector::Zero(side * side);
    for (const auto& e : table) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double c = std::cos(phi), s = std::sin(phi);
        const double a2 = e.a * e.a, b2 = e.b * e.b;
        for (Index i = 0; i < side; ++i) {
            const double y = (h - static_cast<double>(i)) / h - e.y0;
            for (Index j = 0; j < side; ++j) {
                const double x = (static_cast<double>(j) - h) / h - e.x0;
                const double u = x * c + y * s;
                const double w = y * c - x * s;
                if (u * u / a2 + w * w / b2 <= 1.0) {
                    img[i * side + j] += e.intensity;
                }
            }
        }
    }
    // overlapping intensities such as 1 - 0.8 - 0.2 leave roundoff residue
    img = img.unaryExpr([](double v) { return std::abs(v) < 1e-12 ? 0.0 : v; });
    return img;
}

namespace detail {

/// Appends the pixel intersections of the line {o*nrm + s*dir} with an N x N
/// image occupying [-N/2, N/2]^2 (pixel (i, j) has center (j - N/2 + 1/2, N/2 - 1/2 - i)).
inline void trace_ray(Index side, double dx, double dy, double ox, double oy, Index row,
                      std::vector<Triplet>& out, std::vector<double>& ts)
{
    const double half = 0.5 * static_cast<double>(side);
    ts.clear();
    // parameter range inside the square
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    auto clip = [&](double o, double d) {
        if (std::abs(d) < 1e-14) {
            if (o < -half || o > half) {
                tmin = 1.0;
                tmax = 0.0;
            }
            return;
        }
        double t0 = (-half - o) / d, t1 = (half - o) / d;
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
    };
    clip(ox, dx);
    clip(oy, dy);
    if (!(tmax > tmin)) {
        return;
    }
    ts.push_back(tmin);
    ts.push_back(tmax);
    for (Index k = 0; k <= side; ++k) {
        const double g = -half + static_cast<double>(k);
        if (std::abs(dx) >= 1e-14) {
            const double t = (g - ox) / dx;
            if (t > tmin && t < tmax) {
                ts.push_back(t);
            }
        }
        if (std::abs(dy) >= 1e-14) {
            const double t = (g - oy) / dy;
            if (t > tmin && t < tmax) {
                ts.push_back(t);
            }
        }
    }
    std::sort(ts.begin(), ts.end());
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const double len = ts[k + 1] - ts[k];
        if (len <= 1e-12) {
            continue;
        }
        const double tm = 0.5 * (ts[k] + ts[k + 1]);
        const double px = ox + tm * dx, py = oy + tm * dy;
        const auto j = static_cast<Index>(std::floor(px + half));
        const auto i = static_cast<Index>(std::floor(half - py));
        if (i < 0 || i >= side || j < 0 || j >= side) {
            continue;
        }
        out.push_back({row, i * side + j, len});
    }
}

} // namespace detail

/// Parallel-beam system matrix. Row angle_index * n_rays + ray holds the
/// intersection lengths of that ray with every pixel. Rays at angle theta run
/// along (cos theta, sin theta), so 0 degrees traverses pixel rows; their signed
/// offsets along the normal are equispaced over a detector of width side - 1.
/// Rows that miss the image stay in the matrix as zero rows.
inline SparseOperator build_parallel_system(const Geometry& geom)
{
    geom.validate();
    const Index side = geom.image_side;
    const double width = static_cast<double>(side - 1);
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(geom.rows()) * static_cast<std::size_t>(2 * side));
    std::vector<double> ts;
    Index row = 0;
    for (double deg : geom.angles) {
        const double th = deg * std::numbers::pi / 180.0;
        const double dx = std::cos(th), dy = std::sin(th);
        const double nx = -dy, ny = dx;
        for (Index r = 0; r < geom.n_rays; ++r, ++row) {
            const double off = geom.n_rays == 1
                                   ? 0.0
                                   : -0.5 * width + width * static_cast<double>(r) /
                                                        static_cast<double>(geom.n_rays - 1);
            detail::trace_ray(side, dx, dy, off * nx, off * ny, row, trip, ts);
        }
    }
    return SparseOperator::from_triplets(geom.rows(), geom.cols(), trip);
}

struct NoiseModel {
    double relative_level = 0.02;
    std::uint64_t seed = 0;
};

/// Standard normal samples from mt19937_64 through the Box-Muller transform.
/// Both libstdc++ and libc++ implement mt19937_64 identically, so the stream is
/// reproducible across platforms (std::normal_distribution is not).
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double next()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        constexpr double scale = 1.0 / 9007199254740992.0; // 2^-53
        const double u1 = static_cast<double>((rng_() >> 11) + 1) * scale; // (0, 1]
        const double u2 = static_cast<double>(rng_() >> 11) * scale;       // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Standard deviation used by add_noise: relative_level * mean(b).
inline double noise_sigma(const Vector& b, const NoiseModel& model)
{
    const double total = b.sum();
    require(total > 0.0, "add_noise: sum of b must be positive");
    return model.relative_level / static_cast<double>(b.size()) * total;
}

inline Vector add_noise(const Vector& b, const NoiseModel& model)
{
    const double sigma = noise_sigma(b, model);
    if (model.relative_level == 0.0) {
        return b;
    }
    GaussianStream gs(model.seed);
    Vector out = b;
    for (Index j = 0; j < out.size(); ++j) {
        out[j] += sigma * gs.next();
    }
    return out;
}

// --- export -----------------------------------------------------------------

/// Raw little-endian float64 with a one-line text header "float64 <rows> <cols>".
inline void write_raw(const std::string& path, const Vector& v, Index rows, Index cols)
{
    require(rows * cols == v.size(), "write_raw: dims do not match data");
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot open " + path);
    }
    f << "float64 " << rows << ' ' << cols << '\n';
    for (Index i = 0; i < v.size(); ++i) {
        unsigned char bytes[8];
        std::uint64_t bits;
        std::memcpy(&bits, &v[i], 8);
        for (int k = 0; k < 8; ++k) {
            bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
        }
        f.write(reinterpret_cast<const char*>(bytes), 8);
    }
    if (!f) {
        throw std::runtime_error("write failed: " + path);
    }
}

inline Vector read_raw(const std::string& path, Index* rows = nullptr, Index* cols = nullptr)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot open " + path);
    }
    std::string tag;
    Index r = 0, c = 0;
    f >> tag >> r >> c;
    require(tag == "float64" && r >= 0 && c >= 0, "read_raw: bad header in " + path);
    f.get();
    Vector v(r * c);
    for (Index i = 0; i < v.size(); ++i) {
        unsigned char bytes[8];
        if (!f.read(reinterpret_cast<char*>(bytes), 8)) {
            throw std::runtime_error("read_raw: truncated " + path);
        }
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) {
            bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
        }
        std::memcpy(&v[i], &bits, 8);
    }
    if (rows) {
        *rows = r;
    }
    if (cols) {
        *cols = c;
    }
    return v;
}

/// 8-bit binary PGM, gray levels scaled linearly from [min, max].
inline void write_pgm(const std::string& path, const Vector& v, Index rows, Index cols)
{
    require(rows * cols == v.size(), "write_pgm: dims do not match data");
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot open " + path);
    }
    const double lo = v.size() ? v.minCoeff() : 0.0;
    const double hi = v.size() ? v.maxCoeff() : 0.0;
    const double span = hi > lo ? hi - lo : 1.0;
    f << "P5\n" << cols << ' ' << rows << "\n255\n";
    for (Index i = 0; i < v.size(); ++i) {
        const double t = std::clamp((v[i] - lo) / span, 0.0, 1.0);
        f.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
    if (!f) {
        throw std::runtime_error("write failed: " + path);
    }
}

} // namespace supfbs
