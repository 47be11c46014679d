#include <deckfuse/error.hpp>
#include <deckfuse/stitcher.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace deckfuse
{

namespace
{

constexpr double kHarrisK = 0.04;
constexpr int kWindowRadius = 2;   // 5x5 Gaussian structure-tensor window
constexpr double kWindowSigma = 1.0;
constexpr int kSuppressionRadius = 2; // 5x5 non-maximum suppression
constexpr int kPatchHalf = 8;         // 16x16 descriptor support
constexpr double kMinResponse = 100.0;
constexpr double kRelativeResponse = 1e-4;
constexpr double kRatio = 0.8;
constexpr int kRefineRadius = 8;
constexpr int kRefineIterations = 20;
constexpr double kRefineMaxShift = 5.0;
constexpr double kDuplicateRadius = 1.0;

// Float plane with a validity flag per cell.
struct Plane
{
    int width = 0;
    int height = 0;
    std::vector<double> value;
    std::vector<std::uint8_t> ok;

    Plane(int w, int h) : width(w), height(h), value(static_cast<std::size_t>(w) * h, 0.0), ok(value.size(), 0) {}

    std::size_t at(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

Plane harris_response(const Raster &img)
{
    const int w = img.width();
    const int h = img.height();
    Plane ixx(w, h), iyy(w, h), ixy(w, h);

    for (int y = 1; y + 1 < h; ++y)
    {
        for (int x = 1; x + 1 < w; ++x)
        {
            bool valid = true;
            for (int dy = -1; dy <= 1 && valid; ++dy)
                for (int dx = -1; dx <= 1 && valid; ++dx)
                    valid = img.valid(x + dx, y + dy);
            if (!valid)
                continue;
            const auto p = [&](int dx, int dy) { return static_cast<double>(img.at(x + dx, y + dy)); };
            const double gx = ((p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1))) / 8.0;
            const double gy = ((p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1))) / 8.0;
            const auto i = ixx.at(x, y);
            ixx.value[i] = gx * gx;
            iyy.value[i] = gy * gy;
            ixy.value[i] = gx * gy;
            ixx.ok[i] = 1;
        }
    }

    std::array<double, 2 * kWindowRadius + 1> kernel{};
    double kernel_sum = 0.0;
    for (int k = -kWindowRadius; k <= kWindowRadius; ++k)
    {
        kernel[k + kWindowRadius] = std::exp(-0.5 * k * k / (kWindowSigma * kWindowSigma));
        kernel_sum += kernel[k + kWindowRadius];
    }
    for (auto &k : kernel)
        k /= kernel_sum;

    Plane response(w, h);
    for (int y = kWindowRadius; y + kWindowRadius < h; ++y)
    {
        for (int x = kWindowRadius; x + kWindowRadius < w; ++x)
        {
            double sxx = 0.0, syy = 0.0, sxy = 0.0;
            bool valid = true;
            for (int dy = -kWindowRadius; dy <= kWindowRadius && valid; ++dy)
            {
                for (int dx = -kWindowRadius; dx <= kWindowRadius; ++dx)
                {
                    const auto i = ixx.at(x + dx, y + dy);
                    if (!ixx.ok[i])
                    {
                        valid = false;
                        break;
                    }
                    const double wgt = kernel[dy + kWindowRadius] * kernel[dx + kWindowRadius];
                    sxx += wgt * ixx.value[i];
                    syy += wgt * iyy.value[i];
                    sxy += wgt * ixy.value[i];
                }
            }
            if (!valid)
                continue;
            const auto i = response.at(x, y);
            const double trace = sxx + syy;
            response.value[i] = sxx * syy - sxy * sxy - kHarrisK * trace * trace;
            response.ok[i] = 1;
        }
    }
    return response;
}

// Moves (x, y) to the point q minimising sum w (g . (p - q))^2 over the
// window, i.e. where neighbouring gradients are orthogonal to the offset.
// Exact for ideal and blurred symmetric corners. Returns false if the
// window touches invalid pixels, the system is singular, or the estimate
// drifts more than kRefineMaxShift from the detection.
bool refine_corner(const Raster &img, double &x, double &y)
{
    const double start_x = x, start_y = y;
    const double sigma = kRefineRadius / 2.0;
    for (int iter = 0; iter < kRefineIterations; ++iter)
    {
        const int cx = static_cast<int>(std::lround(x));
        const int cy = static_cast<int>(std::lround(y));
        if (cx - kRefineRadius - 1 < 0 || cy - kRefineRadius - 1 < 0 || cx + kRefineRadius + 1 >= img.width() ||
            cy + kRefineRadius + 1 >= img.height())
            return false;
        double a = 0, b = 0, c = 0, bx = 0, by = 0;
        for (int py = cy - kRefineRadius; py <= cy + kRefineRadius; ++py)
        {
            for (int px = cx - kRefineRadius; px <= cx + kRefineRadius; ++px)
            {
                if (!img.valid(px - 1, py) || !img.valid(px + 1, py) || !img.valid(px, py - 1) ||
                    !img.valid(px, py + 1))
                    return false;
                const double gx = 0.5 * (img.at(px + 1, py) - img.at(px - 1, py));
                const double gy = 0.5 * (img.at(px, py + 1) - img.at(px, py - 1));
                const double r2 = (px - x) * (px - x) + (py - y) * (py - y);
                const double w = std::exp(-0.5 * r2 / (sigma * sigma));
                const double gxx = w * gx * gx, gyy = w * gy * gy, gxy = w * gx * gy;
                a += gxx;
                b += gxy;
                c += gyy;
                bx += gxx * px + gxy * py;
                by += gxy * px + gyy * py;
            }
        }
        const double det = a * c - b * b;
        if (!(det > 1e-9 * (a + c) * (a + c)) || det <= 0.0)
            return false;
        const double nx = (c * bx - b * by) / det;
        const double ny = (a * by - b * bx) / det;
        const double shift = std::hypot(nx - x, ny - y);
        x = nx;
        y = ny;
        if (std::hypot(x - start_x, y - start_y) > kRefineMaxShift)
            return false;
        if (shift < 1e-3)
            break;
    }
    return true;
}

// Vertex of the parabola through three samples, as an offset from the middle.
double parabola_peak(double left, double mid, double right)
{
    const double denom = left - 2.0 * mid + right;
    if (!(denom < 0.0))
        return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

bool patch_descriptor(const Raster &img, int cx, int cy, std::array<float, kDescriptorSize> &out)
{
    if (cx - kPatchHalf < 0 || cy - kPatchHalf < 0 || cx + kPatchHalf > img.width() ||
        cy + kPatchHalf > img.height())
        return false;
    std::array<double, kDescriptorSize> cells{};
    for (int by = 0; by < 8; ++by)
    {
        for (int bx = 0; bx < 8; ++bx)
        {
            double sum = 0.0;
            for (int oy = 0; oy < 2; ++oy)
            {
                for (int ox = 0; ox < 2; ++ox)
                {
                    const int x = cx - kPatchHalf + 2 * bx + ox;
                    const int y = cy - kPatchHalf + 2 * by + oy;
                    if (!img.valid(x, y))
                        return false;
                    sum += img.at(x, y);
                }
            }
            cells[by * 8 + bx] = sum / 4.0;
        }
    }
    double mean = 0.0;
    for (double c : cells)
        mean += c;
    mean /= kDescriptorSize;
    double norm = 0.0;
    for (double &c : cells)
    {
        c -= mean;
        norm += c * c;
    }
    norm = std::sqrt(norm);
    for (int i = 0; i < kDescriptorSize; ++i)
        out[i] = norm > 1e-9 ? static_cast<float>(cells[i] / norm) : 0.0f;
    return true;
}

double descriptor_distance(const Keypoint &a, const Keypoint &b)
{
    double sum = 0.0;
    for (int i = 0; i < kDescriptorSize; ++i)
    {
        const double d = static_cast<double>(a.descriptor[i]) - b.descriptor[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

struct Neighbours
{
    int best = -1;
    double best_distance = std::numeric_limits<double>::infinity();
    double second_distance = std::numeric_limits<double>::infinity();
};

Neighbours nearest(const Keypoint &query, std::span<const Keypoint> pool)
{
    Neighbours n;
    for (std::size_t j = 0; j < pool.size(); ++j)
    {
        const double dist = descriptor_distance(query, pool[j]);
        if (dist < n.best_distance)
        {
            n.second_distance = n.best_distance;
            n.best_distance = dist;
            n.best = static_cast<int>(j);
        }
        else if (dist < n.second_distance)
        {
            n.second_distance = dist;
        }
    }
    return n;
}

} // namespace

std::vector<Keypoint> detect_features(const Raster &img, int max_count)
{
    if (img.channels() != 1)
        throw Error(ErrorCode::PreconditionViolation, "feature detection needs a single-channel image");
    if (max_count < 1)
        throw Error(ErrorCode::PreconditionViolation, "max_count must be at least 1");
    if (img.width() < 2 * kPatchHalf + 1 || img.height() < 2 * kPatchHalf + 1)
        return {};

    const Plane response = harris_response(img);
    double peak = 0.0;
    for (std::size_t i = 0; i < response.value.size(); ++i)
        if (response.ok[i])
            peak = std::max(peak, response.value[i]);
    const double threshold = std::max(kMinResponse, kRelativeResponse * peak);

    std::vector<Keypoint> keypoints;
    const int w = img.width();
    const int h = img.height();
    for (int y = 0; y < h; ++y)
    {
        for (int x = 0; x < w; ++x)
        {
            const auto i = response.at(x, y);
            if (!response.ok[i] || response.value[i] <= threshold)
                continue;
            const double r = response.value[i];
            bool is_max = true;
            for (int dy = -kSuppressionRadius; dy <= kSuppressionRadius && is_max; ++dy)
            {
                for (int dx = -kSuppressionRadius; dx <= kSuppressionRadius; ++dx)
                {
                    if (dx == 0 && dy == 0)
                        continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                        continue;
                    const auto j = response.at(nx, ny);
                    if (!response.ok[j])
                        continue;
                    // Plateaus keep the first cell in raster order.
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (response.value[j] > r || (earlier && response.value[j] == r))
                    {
                        is_max = false;
                        break;
                    }
                }
            }
            if (!is_max)
                continue;

            Keypoint kp;
            double rx = x, ry = y;
            // Blobs and corners near the mask edge fall back to the response peak.
            if (!refine_corner(img, rx, ry))
            {
                const auto ok = [&](int dx, int dy) { return response.ok[response.at(x + dx, y + dy)]; };
                const auto val = [&](int dx, int dy) { return response.value[response.at(x + dx, y + dy)]; };
                rx = x;
                ry = y;
                if (x > 0 && x + 1 < w && ok(-1, 0) && ok(1, 0))
                    rx += parabola_peak(val(-1, 0), r, val(1, 0));
                if (y > 0 && y + 1 < h && ok(0, -1) && ok(0, 1))
                    ry += parabola_peak(val(0, -1), r, val(0, 1));
            }
            if (!patch_descriptor(img, static_cast<int>(std::lround(rx)), static_cast<int>(std::lround(ry)),
                                  kp.descriptor))
                continue;
            kp.x = rx;
            kp.y = ry;
            kp.response = r;
            keypoints.push_back(kp);
        }
    }

    std::stable_sort(keypoints.begin(), keypoints.end(),
                     [](const Keypoint &a, const Keypoint &b) { return a.response > b.response; });

    // Several response maxima around one blurred corner refine to the same point.
    std::vector<Keypoint> unique;
    for (const auto &kp : keypoints)
    {
        const bool duplicate = std::any_of(unique.begin(), unique.end(), [&](const Keypoint &u) {
            return std::hypot(u.x - kp.x, u.y - kp.y) < kDuplicateRadius;
        });
        if (!duplicate)
            unique.push_back(kp);
    }
    keypoints = std::move(unique);
    if (keypoints.size() > static_cast<std::size_t>(max_count))
        keypoints.resize(static_cast<std::size_t>(max_count));
    return keypoints;
}

std::vector<Match> match_features(std::span<const Keypoint> a, std::span<const Keypoint> b)
{
    std::vector<Match> matches;
    if (a.empty() || b.empty())
        return matches;

    std::vector<int> b_to_a(b.size(), -1);
    for (std::size_t j = 0; j < b.size(); ++j)
        b_to_a[j] = nearest(b[j], a).best;

    for (std::size_t i = 0; i < a.size(); ++i)
    {
        const Neighbours n = nearest(a[i], b);
        if (n.best < 0 || !(n.best_distance < kRatio * n.second_distance))
            continue;
        if (b_to_a[static_cast<std::size_t>(n.best)] != static_cast<int>(i))
            continue;
        matches.push_back({static_cast<int>(i), n.best, n.best_distance});
    }
    return matches;
}

} // namespace deckfuse
