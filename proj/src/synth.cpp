#include <deckfuse/error.hpp>
#include <deckfuse/synth.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace deckfuse
{

namespace
{

constexpr double kPi = std::numbers::pi;

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

double dot(const Vec3 &a, const Vec3 &b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Vec3 mul(const Mat3 &m, const Vec3 &v)
{
    return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}

// World-to-camera rotation; camera axes are (forward, left, up).
Mat3 camera_rotation(double pitch, double yaw)
{
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    return Mat3{Vec3{cp * cy, cp * sy, -sp}, Vec3{-sy, cy, 0.0}, Vec3{sp * cy, sp * sy, cp}};
}

struct TextureCanvas
{
    GroundScene &scene;

    GroundPoint ground(int col, int row) const
    {
        return {scene.min_x + col / scene.texel_per_m, scene.max_y - row / scene.texel_per_m};
    }

    // Applies `shade(x, y, current) -> new` to texels inside the given box.
    template <typename Shade>
    void paint(double x0, double x1, double y0, double y1, Shade shade)
    {
        Raster &tex = scene.texture;
        const int c0 = std::max(0, static_cast<int>(std::floor((x0 - scene.min_x) * scene.texel_per_m)));
        const int c1 = std::min(tex.width() - 1, static_cast<int>(std::ceil((x1 - scene.min_x) * scene.texel_per_m)));
        const int r0 = std::max(0, static_cast<int>(std::floor((scene.max_y - y1) * scene.texel_per_m)));
        const int r1 = std::min(tex.height() - 1, static_cast<int>(std::ceil((scene.max_y - y0) * scene.texel_per_m)));
        for (int row = r0; row <= r1; ++row)
        {
            for (int col = c0; col <= c1; ++col)
            {
                const GroundPoint g = ground(col, row);
                const double value = shade(g.x, g.y, static_cast<double>(tex.at(col, row)));
                tex.set(col, row, 0, static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0))));
            }
        }
    }
};

GroundScene blank_scene(double min_x, double max_x, double min_y, double max_y, double texel_per_m, std::uint8_t fill)
{
    if (!(max_x > min_x) || !(max_y > min_y) || !(texel_per_m > 0.0))
        throw Error(ErrorCode::PreconditionViolation, "scene extent and texel density must be positive");
    GroundScene scene;
    scene.min_x = min_x;
    scene.max_x = max_x;
    scene.min_y = min_y;
    scene.max_y = max_y;
    scene.texel_per_m = texel_per_m;
    const int cols = static_cast<int>(std::lround((max_x - min_x) * texel_per_m)) + 1;
    const int rows = static_cast<int>(std::lround((max_y - min_y) * texel_per_m)) + 1;
    scene.texture = Raster(cols, rows, 1, fill);
    return scene;
}

// Bilinear value noise on a lattice of `spacing` meters.
class ValueNoise
{
  public:
    ValueNoise(SynthRng &rng, double min_x, double min_y, double width, double height, double spacing, double sigma)
        : min_x_(min_x), min_y_(min_y), spacing_(spacing)
    {
        cols_ = static_cast<int>(std::ceil(width / spacing)) + 2;
        rows_ = static_cast<int>(std::ceil(height / spacing)) + 2;
        values_.resize(static_cast<std::size_t>(cols_) * rows_);
        for (auto &v : values_)
            v = sigma * rng.normal();
    }

    double operator()(double x, double y) const
    {
        const double gx = std::clamp((x - min_x_) / spacing_, 0.0, cols_ - 1.000001);
        const double gy = std::clamp((y - min_y_) / spacing_, 0.0, rows_ - 1.000001);
        const int ix = static_cast<int>(gx);
        const int iy = static_cast<int>(gy);
        const double fx = gx - ix;
        const double fy = gy - iy;
        const auto at = [&](int i, int j) { return values_[static_cast<std::size_t>(j) * cols_ + i]; };
        return (1 - fy) * ((1 - fx) * at(ix, iy) + fx * at(ix + 1, iy)) +
               fy * ((1 - fx) * at(ix, iy + 1) + fx * at(ix + 1, iy + 1));
    }

  private:
    double min_x_, min_y_, spacing_;
    int cols_ = 0, rows_ = 0;
    std::vector<double> values_;
};

double segment_distance(double px, double py, const GroundPoint &a, const GroundPoint &b)
{
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (a.x + t * vx), py - (a.y + t * vy));
}

constexpr double kFiducialRadius = 0.2;
constexpr double kFiducialRing = 0.45;
constexpr double kDelaminationSigma = 0.18;
constexpr double kCrackHalfLength = 0.45;
constexpr double kCrackHalfWidth = 0.02;
constexpr double kStainsPerSquareMeter = 1.2;

} // namespace

std::string_view to_string(DefectKind kind)
{
    return kind == DefectKind::Crack ? "crack" : "delamination";
}

double SynthRng::normal()
{
    if (spare_)
    {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * kPi * u2);
    return radius * std::cos(2.0 * kPi * u2);
}

std::optional<double> GroundScene::value_at(const GroundPoint &g) const
{
    return sample_bilinear(texture, (g.x - min_x) * texel_per_m, (max_y - g.y) * texel_per_m);
}

std::optional<SourcePixel> pinhole_project(const CameraRig &rig, const GroundPoint &g)
{
    const Mat3 rot = camera_rotation(rig.theta, rig.gamma);
    const Vec3 center{rig.l, rig.d, rig.h};
    const Vec3 translation = mul(rot, center);

    // P = [R | -R C] applied to the homogeneous ground point (x, y, 0, 1).
    std::array<std::array<double, 4>, 3> projection{};
    for (int r = 0; r < 3; ++r)
    {
        for (int c = 0; c < 3; ++c)
            projection[r][c] = rot[r][c];
        projection[r][3] = -translation[r];
    }
    const std::array<double, 4> world{g.x, g.y, 0.0, 1.0};
    Vec3 ray{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
            ray[r] += projection[r][c] * world[c];

    // World reference directions expressed in the camera frame.
    const Vec3 down = mul(rot, Vec3{0.0, 0.0, -1.0});
    const Vec3 heading = mul(rot, Vec3{std::cos(rig.gamma), std::sin(rig.gamma), 0.0});
    const Vec3 lateral = mul(rot, Vec3{-std::sin(rig.gamma), std::cos(rig.gamma), 0.0});

    const double forward = dot(ray, heading);
    const double side = dot(ray, lateral);
    const double horizontal = std::hypot(forward, side);
    if (horizontal == 0.0)
        return std::nullopt;
    const double elevation = std::atan2(dot(ray, down), horizontal);
    const double azimuth = std::atan2(side, forward);
    if (std::abs(azimuth) > rig.alpha + 1e-9)
        return std::nullopt;

    const double u = (elevation - (rig.theta - rig.alpha)) * (rig.rows - 1) / (2.0 * rig.alpha);
    const double v = (azimuth + rig.alpha) * (rig.cols - 1) / (2.0 * rig.alpha);
    const double slack = 1e-6;
    if (u < -slack || u > rig.rows - 1 + slack || v < -slack || v > rig.cols - 1 + slack)
        return std::nullopt;
    return SourcePixel{u, v};
}

Raster render_view(const CameraRig &rig, const GroundScene &scene)
{
    validate_rig(rig);
    Raster out(rig.cols, rig.rows, 1);
    const double row_step = 2.0 * rig.alpha / (rig.rows - 1);
    const double col_step = 2.0 * rig.alpha / (rig.cols - 1);
    for (int u = 0; u < rig.rows; ++u)
    {
        const double elevation = rig.theta - rig.alpha + u * row_step;
        for (int v = 0; v < rig.cols; ++v)
        {
            if (elevation <= 0.0)
            {
                out.set(v, u, 0, kSkyValue);
                continue;
            }
            const double azimuth = rig.gamma - rig.alpha + v * col_step;
            const Vec3 dir{std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                           -std::sin(elevation)};
            const double t = rig.h / -dir[2];
            const GroundPoint hit{rig.l + t * dir[0], rig.d + t * dir[1]};
            const double value = scene.value_at(hit).value_or(0.0);
            out.set(v, u, 0, static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0))));
        }
    }
    return out;
}

GroundScene make_deck_scene(double length_m, double width_m, double texel_per_m, int n_defects, std::uint64_t seed,
                            SceneStyle style)
{
    if (!(length_m > 0.0) || !(width_m > 0.0) || !(texel_per_m > 0.0) || n_defects < 0)
        throw Error(ErrorCode::PreconditionViolation, "deck dimensions must be positive");
    const double half_width = width_m / 2.0;
    GroundScene scene = blank_scene(0.0, length_m, -half_width, half_width, texel_per_m, 128);
    SynthRng rng(seed);
    TextureCanvas canvas{scene};

    if (style == SceneStyle::Textured)
    {
        const ValueNoise coarse(rng, 0.0, -half_width, length_m, width_m, 0.3, 28.0);
        const ValueNoise fine(rng, 0.0, -half_width, length_m, width_m, 0.12, 10.0);
        canvas.paint(0.0, length_m, -half_width, half_width,
                     [&](double x, double y, double) { return 112.0 + coarse(x, y) + fine(x, y); });

        // Sharp-edged stains and patches (rotated rectangles) give the deck
        // corner-like structure at the decimeter scale.
        const int stains = static_cast<int>(std::lround(kStainsPerSquareMeter * length_m * width_m));
        for (int k = 0; k < stains; ++k)
        {
            const GroundPoint c{rng.uniform(0.0, length_m), rng.uniform(-half_width, half_width)};
            const double half_a = rng.uniform(0.12, 0.3);
            const double half_b = rng.uniform(0.12, 0.3);
            const double angle = rng.uniform(0.0, kPi);
            const double shade = rng.uniform() < 0.5 ? rng.uniform(-75.0, -35.0) : rng.uniform(35.0, 75.0);
            const double ca = std::cos(angle), sa = std::sin(angle);
            const double reach = std::hypot(half_a, half_b);
            canvas.paint(c.x - reach, c.x + reach, c.y - reach, c.y + reach, [&](double x, double y, double cur) {
                const double along = (x - c.x) * ca + (y - c.y) * sa;
                const double across = -(x - c.x) * sa + (y - c.y) * ca;
                return (std::abs(along) <= half_a && std::abs(across) <= half_b) ? cur + shade : cur;
            });
        }

        // Dashed centerline and solid edge lines.
        canvas.paint(0.0, length_m, -0.08, 0.08, [](double x, double, double cur) {
            return std::fmod(x, 3.0) < 1.5 ? 225.0 : cur;
        });
        for (double edge : {-half_width + 0.3, half_width - 0.3})
            canvas.paint(0.0, length_m, edge - 0.06, edge + 0.06, [](double, double, double) { return 220.0; });

        // Calibration checkerboard near the start of the deck.
        const double cb_x = 0.5, cb_y = -half_width + 0.5, cb_square = 0.4;
        canvas.paint(cb_x, cb_x + 4 * cb_square, cb_y, cb_y + 4 * cb_square, [&](double x, double y, double) {
            const int i = static_cast<int>(std::floor((x - cb_x) / cb_square));
            const int j = static_cast<int>(std::floor((y - cb_y) / cb_square));
            return ((i + j) % 2 == 0) ? 235.0 : 25.0;
        });
    }

    // Fiducial targets: a bright disk on a dark ring, every 2.5 m, alternating sides.
    const double fid_offset = std::max(0.0, half_width - 1.2);
    int side = 1;
    for (double x = 1.5; x + 1.0 < length_m; x += 2.5, side = -side)
    {
        const GroundPoint c{x, side * fid_offset * 0.5};
        scene.fiducials.push_back(c);
        canvas.paint(c.x - kFiducialRing, c.x + kFiducialRing, c.y - kFiducialRing, c.y + kFiducialRing,
                     [&](double x, double y, double cur) {
                         const double r = std::hypot(x - c.x, y - c.y);
                         if (r <= kFiducialRadius)
                             return 250.0;
                         if (r <= kFiducialRing)
                             return 30.0;
                         return cur;
                     });
    }

    const double margin = std::min(1.0, half_width / 2.0);
    for (int k = 0; k < n_defects; ++k)
    {
        const GroundPoint p{rng.uniform(margin, length_m - margin), rng.uniform(-half_width + margin, half_width - margin)};
        const DefectKind kind = k % 2 == 0 ? DefectKind::Delamination : DefectKind::Crack;
        scene.defects.push_back({p, kind});
        if (kind == DefectKind::Delamination)
        {
            const double reach = 3.0 * kDelaminationSigma;
            canvas.paint(p.x - reach, p.x + reach, p.y - reach, p.y + reach, [&](double x, double y, double cur) {
                const double r2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
                return cur - 70.0 * std::exp(-r2 / (2.0 * kDelaminationSigma * kDelaminationSigma));
            });
        }
        else
        {
            const double heading = rng.uniform(0.0, kPi);
            const GroundPoint dir{std::cos(heading), std::sin(heading)};
            std::array<GroundPoint, 4> poly{};
            for (int i = 0; i < 4; ++i)
            {
                const double t = -kCrackHalfLength + i * (2.0 * kCrackHalfLength / 3.0);
                const double jitter = (i == 0 || i == 3) ? 0.0 : rng.uniform(-0.06, 0.06);
                poly[i] = {p.x + t * dir.x - jitter * dir.y, p.y + t * dir.y + jitter * dir.x};
            }
            const double reach = kCrackHalfLength + 0.1;
            canvas.paint(p.x - reach, p.x + reach, p.y - reach, p.y + reach, [&](double x, double y, double cur) {
                double dist = 1e9;
                for (int i = 0; i + 1 < 4; ++i)
                    dist = std::min(dist, segment_distance(x, y, poly[i], poly[i + 1]));
                return dist <= kCrackHalfWidth ? 35.0 : cur;
            });
        }
    }
    return scene;
}

GroundScene make_checkerboard_scene(const GroundBox &extent, double square_m, double texel_per_m, double sharpness)
{
    if (!(square_m > 0.0))
        throw Error(ErrorCode::PreconditionViolation, "square size must be positive");
    GroundScene scene = blank_scene(extent.min_x, extent.max_x, extent.min_y, extent.max_y, texel_per_m, 0);
    TextureCanvas canvas{scene};
    canvas.paint(extent.min_x, extent.max_x, extent.min_y, extent.max_y, [&](double x, double y, double) {
        return 128.0 + 100.0 * std::tanh(sharpness * std::sin(kPi * x / square_m) * std::sin(kPi * y / square_m));
    });
    return scene;
}

double footprint_length(const CameraRig &rig)
{
    CameraRig at_origin = rig;
    at_origin.l = at_origin.d = 0.0;
    at_origin.gamma = 0.0;
    const GroundBox box = footprint_box(at_origin);
    return box.max_x - box.min_x;
}

std::pair<FlightPlan, std::vector<FlightView>> make_flight(const GroundScene &scene, const CameraRig &rig_template,
                                                           double overlap, double gps_noise_sigma_m,
                                                           std::uint64_t seed, std::optional<int> views)
{
    if (!(overlap >= 0.0 && overlap < 1.0))
        throw Error(ErrorCode::PreconditionViolation, "overlap must lie in [0, 1)");
    if (!(gps_noise_sigma_m >= 0.0))
        throw Error(ErrorCode::PreconditionViolation, "gps noise must be non-negative");
    if (rig_template.theta - rig_template.alpha <= 0.0)
        throw Error(ErrorCode::FootprintUnbounded, "top image rows reach the horizon");

    CameraRig rig = rig_template;
    rig.l = rig.d = 0.0;
    rig.gamma = 0.0;
    const GroundBox box = footprint_box(rig);

    FlightPlan plan;
    plan.rig_template = rig;
    plan.overlap = overlap;
    plan.footprint_length_m = box.max_x - box.min_x;
    plan.spacing_m = (1.0 - overlap) * plan.footprint_length_m;

    const double first_l = scene.min_x - box.min_x + 0.25;
    int count = 0;
    if (views)
    {
        if (*views < 1)
            throw Error(ErrorCode::PreconditionViolation, "need at least one view");
        count = *views;
    }
    else
    {
        while (first_l + count * plan.spacing_m + box.max_x <= scene.max_x)
            ++count;
    }

    SynthRng rng(seed);
    std::vector<FlightView> out;
    for (int k = 0; k < count; ++k)
    {
        const GroundPoint waypoint{first_l + k * plan.spacing_m, 0.0};
        plan.waypoints.push_back(waypoint);
        plan.headings.push_back(0.0);

        FlightView view;
        view.rig = rig;
        view.rig.l = waypoint.x;
        view.rig.d = waypoint.y;
        view.image = render_view(view.rig, scene);

        LocalPoint tagged{waypoint.x, waypoint.y};
        if (gps_noise_sigma_m > 0.0)
        {
            tagged.east += gps_noise_sigma_m * rng.normal();
            tagged.north += gps_noise_sigma_m * rng.normal();
        }
        const GeoPoint geo = to_geo(tagged, scene.anchor);
        view.tag.lat = geo.lat;
        view.tag.lon = geo.lon;
        view.tag.alt_m = rig.h;
        view.tag.heading_deg = 90.0;
        char stamp[32];
        std::snprintf(stamp, sizeof stamp, "2017-06-14T10:%02d:%02dZ", (2 * k) / 60 % 60, (2 * k) % 60);
        view.tag.timestamp = stamp;
        out.push_back(std::move(view));
    }
    return {std::move(plan), std::move(out)};
}

} // namespace deckfuse
