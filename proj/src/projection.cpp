#include <deckfuse/error.hpp>
#include <deckfuse/projection.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace deckfuse
{

namespace
{

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;
// Angular slack at the field boundary so edge rows/columns are in view.
constexpr double kAngleTolerance = 1e-9;

double wrap_angle(double a)
{
    a = std::remainder(a, 2.0 * kPi);
    return a;
}

// Clamps x into [lo, hi] if it lies within `tol` of the interval, otherwise
// returns nullopt.
std::optional<double> snap_into(double x, double lo, double hi, double tol)
{
    if (x < lo - tol || x > hi + tol || !std::isfinite(x))
        return std::nullopt;
    return std::clamp(x, lo, hi);
}

} // namespace

void validate_rig(const CameraRig &rig)
{
    if (!(rig.h > 0.0) || !std::isfinite(rig.h))
        throw Error(ErrorCode::PreconditionViolation, "camera height must be positive");
    if (!(rig.alpha > 0.0 && rig.alpha < kHalfPi))
        throw Error(ErrorCode::PreconditionViolation, "aperture must lie in (0, 90) degrees");
    if (!(rig.theta > 0.0 && rig.theta <= kHalfPi))
        throw Error(ErrorCode::PreconditionViolation, "pitch must lie in (0, 90] degrees");
    if (rig.rows < 2 || rig.cols < 2)
        throw Error(ErrorCode::PreconditionViolation, "image must be at least 2x2");
    if (!std::isfinite(rig.l) || !std::isfinite(rig.d) || !std::isfinite(rig.gamma))
        throw Error(ErrorCode::PreconditionViolation, "camera position and yaw must be finite");
}

std::optional<SourcePixel> ipm_pixel(const CameraRig &rig, const GroundPoint &g)
{
    const double dx = g.x - rig.l;
    const double dy = g.y - rig.d;
    const double rho = std::hypot(dx, dy);
    if (rho == 0.0)
        return std::nullopt;

    // Azimuth relative to the yaw; atan2 keeps points behind the camera
    // (|offset| > pi/2) out of view.
    const double azimuth_offset = wrap_angle(std::atan2(dy, dx) - rig.gamma);
    if (std::abs(azimuth_offset) > rig.alpha + kAngleTolerance)
        return std::nullopt;

    // h / rho is the closed form of h sin(azimuth) / dy and stays finite at dy = 0.
    const double depression = std::atan(rig.h / rho);
    const double u_raw = (depression - (rig.theta - rig.alpha)) / rig.row_step();
    const double v_raw = (azimuth_offset + rig.alpha) / rig.col_step();

    const auto u = snap_into(u_raw, 0.0, rig.rows - 1.0, kAngleTolerance / rig.row_step());
    const auto v = snap_into(v_raw, 0.0, rig.cols - 1.0, kAngleTolerance / rig.col_step());
    if (!u || !v)
        return std::nullopt;
    return SourcePixel{*u, *v};
}

std::optional<GroundPoint> ground_of_pixel(const CameraRig &rig, double u, double v)
{
    if (!(u >= 0.0 && u <= rig.rows - 1.0 && v >= 0.0 && v <= rig.cols - 1.0))
        throw Error(ErrorCode::PreconditionViolation, "pixel outside the image");

    const double depression = (rig.theta - rig.alpha) + u * rig.row_step();
    if (depression <= 0.0)
        return std::nullopt;
    const double azimuth = (rig.gamma - rig.alpha) + v * rig.col_step();

    // tan(pi/2) is not representable; the nadir ray lands directly below.
    const double rho = std::abs(depression - kHalfPi) < 1e-12 ? 0.0 : rig.h / std::tan(depression);
    return GroundPoint{rig.l + rho * std::cos(azimuth), rig.d + rho * std::sin(azimuth)};
}

Raster render_orthophoto(const CameraRig &rig, const Raster &src, const OrthoGrid &grid)
{
    validate_rig(rig);
    if (src.width() != rig.cols || src.height() != rig.rows)
        throw Error(ErrorCode::DimensionMismatch, "source image is " + std::to_string(src.width()) + "x" +
                                                      std::to_string(src.height()) + ", camera expects " +
                                                      std::to_string(rig.cols) + "x" + std::to_string(rig.rows));
    if (!(grid.gsd > 0.0) || grid.rows < 1 || grid.cols < 1)
        throw Error(ErrorCode::PreconditionViolation, "ortho grid needs gsd > 0 and at least one cell");

    const int channels = src.channels();
    Raster out(grid.cols, grid.rows, channels);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(grid.rows) * grid.cols, 0);
    bool any_invalid = false;

    for (int row = 0; row < grid.rows; ++row)
    {
        for (int col = 0; col < grid.cols; ++col)
        {
            const auto px = ipm_pixel(rig, grid.cell_center(row, col));
            bool ok = px.has_value();
            for (int c = 0; ok && c < channels; ++c)
            {
                const auto value = sample_bilinear(src, px->v, px->u, c);
                if (!value)
                {
                    ok = false;
                    break;
                }
                out.set(col, row, c, static_cast<std::uint8_t>(std::lround(std::clamp(*value, 0.0, 255.0))));
            }
            if (ok)
            {
                mask[static_cast<std::size_t>(row) * grid.cols + col] = 1;
            }
            else
            {
                any_invalid = true;
                for (int c = 0; c < channels; ++c)
                    out.set(col, row, c, 0);
            }
        }
    }
    if (any_invalid)
        out.set_mask(std::move(mask));
    return out;
}

std::optional<std::array<GroundPoint, 4>> ground_footprint(const CameraRig &rig)
{
    if (rig.theta - rig.alpha <= 0.0)
        return std::nullopt;
    const double last_row = rig.rows - 1.0;
    const double last_col = rig.cols - 1.0;
    return std::array<GroundPoint, 4>{*ground_of_pixel(rig, 0, 0), *ground_of_pixel(rig, 0, last_col),
                                      *ground_of_pixel(rig, last_row, last_col), *ground_of_pixel(rig, last_row, 0)};
}

void GroundBox::expand(const GroundPoint &p)
{
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
}

void GroundBox::expand(const GroundBox &b)
{
    expand(GroundPoint{b.min_x, b.min_y});
    expand(GroundPoint{b.max_x, b.max_y});
}

GroundBox footprint_box(const CameraRig &rig, std::optional<double> max_range_m)
{
    validate_rig(rig);
    const double top = rig.theta - rig.alpha;
    const double bottom = std::min(rig.theta + rig.alpha, kHalfPi);

    double far_range;
    if (top <= 0.0)
    {
        if (!max_range_m)
            throw Error(ErrorCode::FootprintUnbounded, "top image rows reach the horizon");
        far_range = *max_range_m;
    }
    else
    {
        far_range = rig.h / std::tan(top);
        if (max_range_m)
            far_range = std::min(far_range, *max_range_m);
    }
    const double near_range = bottom >= kHalfPi ? 0.0 : rig.h / std::tan(bottom);

    // The visible region is an annular sector about the camera; its box is
    // spanned by the four corners and any cardinal directions inside the
    // azimuth range.
    std::vector<double> azimuths{rig.gamma - rig.alpha, rig.gamma + rig.alpha};
    for (int k = -4; k <= 4; ++k)
    {
        const double cardinal = k * kHalfPi;
        if (cardinal > rig.gamma - rig.alpha && cardinal < rig.gamma + rig.alpha)
            azimuths.push_back(cardinal);
    }

    const GroundPoint first{rig.l + far_range * std::cos(azimuths[0]), rig.d + far_range * std::sin(azimuths[0])};
    GroundBox box{first.x, first.x, first.y, first.y};
    for (double az : azimuths)
    {
        for (double range : {near_range, far_range})
            box.expand(GroundPoint{rig.l + range * std::cos(az), rig.d + range * std::sin(az)});
    }
    return box;
}

OrthoGrid grid_covering(const GroundBox &box, const GroundPoint &camera, double gsd)
{
    if (!(gsd > 0.0))
        throw Error(ErrorCode::PreconditionViolation, "gsd must be positive");
    const auto first_col = static_cast<int>(std::floor((box.min_x - camera.x) / gsd));
    const auto last_col = static_cast<int>(std::ceil((box.max_x - camera.x) / gsd));
    const auto first_row = static_cast<int>(std::floor((camera.y - box.max_y) / gsd));
    const auto last_row = static_cast<int>(std::ceil((camera.y - box.min_y) / gsd));

    OrthoGrid grid;
    grid.gsd = gsd;
    grid.origin = {camera.x + first_col * gsd, camera.y - first_row * gsd};
    grid.cols = last_col - first_col + 1;
    grid.rows = last_row - first_row + 1;
    return grid;
}

double nominal_gsd(const CameraRig &rig)
{
    return rig.h / std::sin(rig.theta) * rig.col_step();
}

FlightHeightPlan plan_flight_height(double deck_width_m, double alpha, int cols)
{
    if (!(deck_width_m > 0.0) || !(alpha > 0.0 && alpha < kHalfPi) || cols < 2)
        throw Error(ErrorCode::PreconditionViolation, "need deck width > 0, aperture in (0, 90) deg and >= 2 columns");
    return {deck_width_m / (2.0 * std::tan(alpha)), deck_width_m / cols};
}

} // namespace deckfuse
