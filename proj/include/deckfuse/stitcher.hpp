#pragma once

#include <deckfuse/geodesy.hpp>
#include <deckfuse/projection.hpp>
#include <deckfuse/raster.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace deckfuse
{

inline constexpr int kDescriptorSize = 64;

struct Keypoint
{
    double x = 0.0; ///< column, subpixel
    double y = 0.0; ///< row, subpixel
    double response = 0.0;
    std::array<float, kDescriptorSize> descriptor{};
};

/// Harris corners (5x5 non-maximum suppression, subpixel refined) with 8x8
/// mean-subtracted, unit-norm patch descriptors taken from the surrounding
/// 16x16 region at half resolution. Keypoints whose support touches a masked
/// pixel or the border are dropped. Result is sorted by decreasing response.
/// Throws PreconditionViolation for multi-channel input.
std::vector<Keypoint> detect_features(const Raster &img, int max_count);

struct Match
{
    int index_a = 0;
    int index_b = 0;
    double distance = 0.0;
};

/// Nearest-neighbour descriptor matching with a 0.8 ratio test and a mutual
/// nearest-neighbour cross-check.
std::vector<Match> match_features(std::span<const Keypoint> a, std::span<const Keypoint> b);

struct Point2
{
    double x = 0.0;
    double y = 0.0;
};

/// x' = scale * R(rotation) * x + t
struct Similarity2D
{
    double scale = 1.0;
    double rotation = 0.0;
    double tx = 0.0;
    double ty = 0.0;

    Point2 apply(const Point2 &p) const;
    Similarity2D inverse() const;
    /// (this * other)(p) == this->apply(other.apply(p))
    Similarity2D compose(const Similarity2D &other) const;

    static Similarity2D translation(double dx, double dy) { return {1.0, 0.0, dx, dy}; }
};

struct Correspondence
{
    Point2 from;
    Point2 to;
};

struct TransformEstimate
{
    Similarity2D transform;
    int inlier_count = 0;
};

inline constexpr int kRansacIterations = 500;
inline constexpr double kRansacInlierPx = 2.0;
inline constexpr std::uint32_t kRansacSeed = 0x5EED;

/// RANSAC over 2-point similarity hypotheses followed by a least-squares
/// refit on the largest consensus set. Deterministic: the sampler is an
/// mt19937 seeded with kRansacSeed and indices are drawn by modulo.
/// Throws DegenerateInput with fewer than two correspondences or when no
/// sample spans a non-zero baseline.
TransformEstimate estimate_transform(std::span<const Correspondence> pairs);

enum class RegistrationMethod
{
    FeatureBased,
    GpsFallback,
};

std::string_view to_string(RegistrationMethod method);

struct RegistrationResult
{
    Similarity2D transform; ///< maps `next` pixels into `base` pixels
    int inlier_count = 0;
    RegistrationMethod method = RegistrationMethod::GpsFallback;
};

struct PixelOffset
{
    double dx = 0.0;
    double dy = 0.0;
};

/// Pixel displacement of b's geotag relative to a's on an ortho grid with the
/// given gsd (rows grow southward).
PixelOffset gps_offset(const ImageGeoTag &a, const ImageGeoTag &b, const GeoPoint &anchor, double gsd);

inline constexpr int kDefaultTau = 12;
inline constexpr int kRegistrationFeatures = 600;

/// Feature registration of `next` onto `base`; falls back to the GPS offset
/// when fewer than `tau` inliers survive or the fitted scale leaves [0.5, 2].
/// Both orthophotos must share gsd and place their camera on the same cell.
RegistrationResult register_pair(const Raster &base, const Raster &next, const ImageGeoTag &tag_base,
                                 const ImageGeoTag &tag_next, double gsd, const GeoPoint &anchor,
                                 int tau = kDefaultTau);

struct PlacedImage
{
    Raster image;
    Similarity2D to_frame; ///< image pixel (col,row) -> first-image pixel
};

/// Orthomosaic with its geo-anchor: `anchor` sits at pixel (anchor_row, anchor_col).
struct SurfaceMap
{
    Raster mosaic;
    GeoPoint anchor;
    double anchor_row = 0.0;
    double anchor_col = 0.0;
    double gsd = 0.0;
    /// First-image frame coordinates of mosaic pixel (0, 0).
    double frame_offset_x = 0.0;
    double frame_offset_y = 0.0;
};

/// Feathered blend of all images in the first image's frame. Each valid
/// contributor is weighted by its distance to the nearest image border,
/// measured to the outer pixel edge so border pixels keep a weight of 0.5.
/// `anchor_row/col` locate the anchor inside the first image.
/// Throws EmptyInput for an empty list, PreconditionViolation if the first
/// transform is not the identity, DimensionMismatch on mixed channel counts.
SurfaceMap composite(std::span<const PlacedImage> images, const GeoPoint &anchor, double anchor_row,
                     double anchor_col, double gsd);

/// One perspective image of a batch. The rig is expressed relative to the
/// geotag: (l, d) = (0, 0) puts the camera directly above the tagged point.
struct GeoTaggedView
{
    Raster image;
    CameraRig rig;
    ImageGeoTag tag;
    /// Operator-supplied placement onto the previous view; skips registration.
    std::optional<Similarity2D> manual_transform;
};

struct StitchStep
{
    std::string method; ///< "FeatureBased", "GpsFallback" or "Manual"
    int inlier_count = 0;
    Similarity2D to_previous;
};

struct StitchResult
{
    SurfaceMap map;
    OrthoGrid grid;                 ///< per-view orthophoto grid, relative to each geotag
    std::vector<StitchStep> steps;  ///< steps[0] describes the reference view
};

/// Orthophotos are clipped at this many camera heights from the camera.
inline constexpr double kMaxOrthoRangeHeights = 8.0;

/// The semi-autonomous mosaic pipeline: perspective-correct every view onto
/// a shared camera-centred grid at the first view's nominal gsd, register
/// consecutive views (features first, GPS as fallback, manual transforms
/// when supplied), chain the transforms into the first view's frame and
/// composite. The map is anchored at the first view's geotag.
/// Throws EmptyInput for an empty batch.
StitchResult stitch_views(std::span<const GeoTaggedView> views, int tau = kDefaultTau);

} // namespace deckfuse
