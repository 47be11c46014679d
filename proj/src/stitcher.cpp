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

// Slack so transforms that are integral up to rounding do not gain a column.
constexpr double kExtentEpsilon = 1e-7;

bool is_identity(const Similarity2D &s)
{
    return std::abs(s.scale - 1.0) < 1e-12 && std::abs(s.rotation) < 1e-12 && std::abs(s.tx) < 1e-9 &&
           std::abs(s.ty) < 1e-9;
}

} // namespace

SurfaceMap composite(std::span<const PlacedImage> images, const GeoPoint &anchor, double anchor_row,
                     double anchor_col, double gsd)
{
    if (images.empty())
        throw Error(ErrorCode::EmptyInput, "nothing to composite");
    if (!is_identity(images.front().to_frame))
        throw Error(ErrorCode::PreconditionViolation, "the first image defines the frame and must be untransformed");
    const int channels = images.front().image.channels();

    double min_x = std::numeric_limits<double>::infinity();
    double min_y = min_x;
    double max_x = -min_x;
    double max_y = -min_x;
    std::vector<Similarity2D> to_image;
    for (const auto &placed : images)
    {
        if (placed.image.channels() != channels)
            throw Error(ErrorCode::DimensionMismatch, "images differ in channel count");
        if (placed.image.empty())
            throw Error(ErrorCode::EmptyInput, "empty image in composite");
        const double w = placed.image.width() - 1.0;
        const double h = placed.image.height() - 1.0;
        for (const Point2 corner : {Point2{0, 0}, Point2{w, 0}, Point2{w, h}, Point2{0, h}})
        {
            const Point2 p = placed.to_frame.apply(corner);
            min_x = std::min(min_x, p.x);
            min_y = std::min(min_y, p.y);
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
        to_image.push_back(placed.to_frame.inverse());
    }

    const double x0 = std::floor(min_x + kExtentEpsilon);
    const double y0 = std::floor(min_y + kExtentEpsilon);
    const int cols = static_cast<int>(std::ceil(max_x - kExtentEpsilon) - x0) + 1;
    const int rows = static_cast<int>(std::ceil(max_y - kExtentEpsilon) - y0) + 1;

    Raster mosaic(cols, rows, channels);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows) * cols, 0);
    bool any_invalid = false;
    std::vector<double> accum(static_cast<std::size_t>(channels));
    std::vector<double> sample(static_cast<std::size_t>(channels));

    for (int row = 0; row < rows; ++row)
    {
        for (int col = 0; col < cols; ++col)
        {
            std::fill(accum.begin(), accum.end(), 0.0);
            double weight_sum = 0.0;
            const Point2 frame{col + x0, row + y0};
            for (std::size_t k = 0; k < images.size(); ++k)
            {
                const Raster &img = images[k].image;
                const Point2 p = to_image[k].apply(frame);
                bool ok = true;
                for (int c = 0; c < channels && ok; ++c)
                {
                    const auto v = sample_bilinear(img, p.x, p.y, c);
                    ok = v.has_value();
                    if (ok)
                        sample[c] = *v;
                }
                if (!ok)
                    continue;
                const double weight = std::min({p.x + 0.5, p.y + 0.5, img.width() - 0.5 - p.x,
                                                img.height() - 0.5 - p.y});
                for (int c = 0; c < channels; ++c)
                    accum[c] += weight * sample[c];
                weight_sum += weight;
            }
            if (weight_sum > 0.0)
            {
                mask[static_cast<std::size_t>(row) * cols + col] = 1;
                for (int c = 0; c < channels; ++c)
                    mosaic.set(col, row, c,
                               static_cast<std::uint8_t>(std::lround(std::clamp(accum[c] / weight_sum, 0.0, 255.0))));
            }
            else
            {
                any_invalid = true;
            }
        }
    }
    if (any_invalid)
        mosaic.set_mask(std::move(mask));

    SurfaceMap out;
    out.mosaic = std::move(mosaic);
    out.anchor = anchor;
    out.anchor_row = anchor_row - y0;
    out.anchor_col = anchor_col - x0;
    out.gsd = gsd;
    out.frame_offset_x = x0;
    out.frame_offset_y = y0;
    return out;
}

} // namespace deckfuse
