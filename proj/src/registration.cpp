#include <deckfuse/error.hpp>
#include <deckfuse/stitcher.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace deckfuse
{

namespace
{

using Complex = std::complex<double>;

Complex as_complex(const Point2 &p)
{
    return {p.x, p.y};
}

Similarity2D from_complex(Complex z, Complex t)
{
    return {std::abs(z), std::arg(z), t.real(), t.imag()};
}

// Least-squares similarity (complex-linear fit b = z a + t) over the given pairs.
std::optional<Similarity2D> fit_similarity(std::span<const Correspondence> pairs, const std::vector<int> &subset)
{
    if (subset.size() < 2)
        return std::nullopt;
    Complex mean_from{0.0, 0.0}, mean_to{0.0, 0.0};
    for (int i : subset)
    {
        mean_from += as_complex(pairs[i].from);
        mean_to += as_complex(pairs[i].to);
    }
    mean_from /= static_cast<double>(subset.size());
    mean_to /= static_cast<double>(subset.size());

    Complex cross{0.0, 0.0};
    double spread = 0.0;
    for (int i : subset)
    {
        const Complex a = as_complex(pairs[i].from) - mean_from;
        const Complex b = as_complex(pairs[i].to) - mean_to;
        cross += std::conj(a) * b;
        spread += std::norm(a);
    }
    if (spread < 1e-18)
        return std::nullopt;
    const Complex z = cross / spread;
    if (std::abs(z) < 1e-12)
        return std::nullopt;
    return from_complex(z, mean_to - z * mean_from);
}

double residual(const Similarity2D &s, const Correspondence &c)
{
    const Point2 p = s.apply(c.from);
    return std::hypot(p.x - c.to.x, p.y - c.to.y);
}

std::vector<int> inliers_of(const Similarity2D &s, std::span<const Correspondence> pairs)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (residual(s, pairs[i]) <= kRansacInlierPx)
            out.push_back(static_cast<int>(i));
    return out;
}

constexpr int kRefineIterations = 30;
constexpr double kRefineMaxDrift = 3.0;   // pixels, at the image corners
constexpr int kRefineMinOverlap = 400;

// Solves the 3x3 system in place by Gaussian elimination with partial pivoting.
bool solve3(std::array<std::array<double, 4>, 3> &m, std::array<double, 3> &x)
{
    for (int col = 0; col < 3; ++col)
    {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col]))
                pivot = r;
        if (std::abs(m[pivot][col]) < 1e-12)
            return false;
        std::swap(m[col], m[pivot]);
        for (int r = col + 1; r < 3; ++r)
        {
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c)
                m[r][c] -= f * m[col][c];
        }
    }
    for (int r = 2; r >= 0; --r)
    {
        double v = m[r][3];
        for (int c = r + 1; c < 3; ++c)
            v -= m[r][c] * x[c];
        x[r] = v / m[r][r];
    }
    return true;
}

// Gauss-Newton rigid alignment of `next` onto `base` over their valid
// overlap, started from the feature estimate. Orthophotos on a shared gsd
// have unit scale, so only rotation and translation are refined. Keypoint
// positions pick up a bias where two views blur the same ground differently
// (far range in one, near range in the other); the intensity fit averages
// over the whole overlap instead. Keeps `init` when the overlap is small,
// the system degenerates, or the solution wanders off.
Similarity2D refine_alignment(const Raster &base, const Raster &next, const Similarity2D &init)
{
    // q = c' + R(phi) (p - c), with c the image centre and c' its image.
    const double cx = 0.5 * (next.width() - 1);
    const double cy = 0.5 * (next.height() - 1);
    const Point2 mapped_centre = init.apply({cx, cy});
    double phi = init.rotation;
    double tx = mapped_centre.x;
    double ty = mapped_centre.y;

    for (int iter = 0; iter < kRefineIterations; ++iter)
    {
        const double cs = std::cos(phi), sn = std::sin(phi);
        std::array<std::array<double, 4>, 3> normal{};
        int used = 0;
        for (int row = 0; row < next.height(); ++row)
        {
            for (int col = 0; col < next.width(); ++col)
            {
                if (!next.valid(col, row))
                    continue;
                const double dx = col - cx, dy = row - cy;
                const double qx = tx + cs * dx - sn * dy;
                const double qy = ty + sn * dx + cs * dy;
                const auto v = sample_bilinear(base, qx, qy, 0);
                const auto l = sample_bilinear(base, qx - 1.0, qy, 0);
                const auto r = sample_bilinear(base, qx + 1.0, qy, 0);
                const auto u = sample_bilinear(base, qx, qy - 1.0, 0);
                const auto d = sample_bilinear(base, qx, qy + 1.0, 0);
                if (!v || !l || !r || !u || !d)
                    continue;
                const double gx = 0.5 * (*r - *l);
                const double gy = 0.5 * (*d - *u);
                const std::array<double, 3> j{gx * (-sn * dx - cs * dy) + gy * (cs * dx - sn * dy), gx, gy};
                const double residual = next.at(col, row) - *v;
                for (int i = 0; i < 3; ++i)
                {
                    for (int k = 0; k < 3; ++k)
                        normal[i][k] += j[i] * j[k];
                    normal[i][3] += j[i] * residual;
                }
                ++used;
            }
        }
        if (used < kRefineMinOverlap)
            return init;
        std::array<double, 3> step{};
        if (!solve3(normal, step))
            return init;
        phi += step[0];
        tx += step[1];
        ty += step[2];
        if (std::abs(step[0]) * std::hypot(cx, cy) + std::hypot(step[1], step[2]) < 1e-4)
            break;
    }

    const double cs = std::cos(phi), sn = std::sin(phi);
    const Similarity2D refined{1.0, phi, tx - (cs * cx - sn * cy), ty - (sn * cx + cs * cy)};
    const double w = next.width() - 1.0, h = next.height() - 1.0;
    for (const Point2 corner : {Point2{0, 0}, Point2{w, 0}, Point2{w, h}, Point2{0, h}})
    {
        const Point2 p = refined.apply(corner), q = init.apply(corner);
        if (!(std::hypot(p.x - q.x, p.y - q.y) <= kRefineMaxDrift))
            return init;
    }
    return refined;
}

} // namespace

Point2 Similarity2D::apply(const Point2 &p) const
{
    const double c = scale * std::cos(rotation);
    const double s = scale * std::sin(rotation);
    return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
}

Similarity2D Similarity2D::inverse() const
{
    const Complex z = std::polar(scale, rotation);
    const Complex inv = 1.0 / z;
    return from_complex(inv, -inv * Complex{tx, ty});
}

Similarity2D Similarity2D::compose(const Similarity2D &other) const
{
    const Complex z1 = std::polar(scale, rotation);
    const Complex z2 = std::polar(other.scale, other.rotation);
    return from_complex(z1 * z2, z1 * Complex{other.tx, other.ty} + Complex{tx, ty});
}

TransformEstimate estimate_transform(std::span<const Correspondence> pairs)
{
    if (pairs.size() < 2)
        throw Error(ErrorCode::DegenerateInput, "need at least two correspondences");

    std::mt19937 rng(kRansacSeed);
    const auto n = static_cast<std::uint32_t>(pairs.size());
    std::vector<int> best;
    for (int iter = 0; iter < kRansacIterations; ++iter)
    {
        const std::uint32_t i = rng() % n;
        const std::uint32_t j = rng() % n;
        if (i == j)
            continue;
        const auto hypothesis = fit_similarity(pairs, {static_cast<int>(i), static_cast<int>(j)});
        if (!hypothesis)
            continue;
        auto support = inliers_of(*hypothesis, pairs);
        if (support.size() > best.size())
            best = std::move(support);
    }
    if (best.size() < 2)
        throw Error(ErrorCode::DegenerateInput, "no non-degenerate sample found");

    auto refit = fit_similarity(pairs, best);
    if (!refit)
        throw Error(ErrorCode::DegenerateInput, "inlier set is degenerate");
    return {*refit, static_cast<int>(best.size())};
}

std::string_view to_string(RegistrationMethod method)
{
    return method == RegistrationMethod::FeatureBased ? "FeatureBased" : "GpsFallback";
}

PixelOffset gps_offset(const ImageGeoTag &a, const ImageGeoTag &b, const GeoPoint &anchor, double gsd)
{
    if (!(gsd > 0.0))
        throw Error(ErrorCode::PreconditionViolation, "gsd must be positive");
    const LocalPoint la = to_local(a.position(), anchor);
    const LocalPoint lb = to_local(b.position(), anchor);
    return {(lb.east - la.east) / gsd, -(lb.north - la.north) / gsd};
}

RegistrationResult register_pair(const Raster &base, const Raster &next, const ImageGeoTag &tag_base,
                                 const ImageGeoTag &tag_next, double gsd, const GeoPoint &anchor, int tau)
{
    const PixelOffset offset = gps_offset(tag_base, tag_next, anchor, gsd);
    RegistrationResult fallback{Similarity2D::translation(offset.dx, offset.dy), 0, RegistrationMethod::GpsFallback};

    const Raster lum_base = to_luminance(base);
    const Raster lum_next = to_luminance(next);
    const auto kp_base = detect_features(lum_base, kRegistrationFeatures);
    const auto kp_next = detect_features(lum_next, kRegistrationFeatures);
    const auto matches = match_features(kp_next, kp_base);
    if (matches.size() < 2)
        return fallback;

    std::vector<Correspondence> pairs;
    pairs.reserve(matches.size());
    for (const auto &m : matches)
        pairs.push_back({{kp_next[m.index_a].x, kp_next[m.index_a].y}, {kp_base[m.index_b].x, kp_base[m.index_b].y}});

    try
    {
        const TransformEstimate estimate = estimate_transform(pairs);
        fallback.inlier_count = estimate.inlier_count;
        if (estimate.inlier_count < tau || estimate.transform.scale < 0.5 || estimate.transform.scale > 2.0)
            return fallback;
        return {refine_alignment(lum_base, lum_next, estimate.transform), estimate.inlier_count,
                RegistrationMethod::FeatureBased};
    }
    catch (const Error &e)
    {
        if (e.code() != ErrorCode::DegenerateInput)
            throw;
        return fallback;
    }
}

} // namespace deckfuse
