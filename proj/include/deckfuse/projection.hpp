#pragma once

#include <deckfuse/geodesy.hpp>
#include <deckfuse/raster.hpp>

#include <array>
#include <optional>

namespace deckfuse
{

/// One shot of an inverse-perspective-mapping camera. The image is an
/// equiangular grid: row u looks `theta - alpha + u * 2 alpha / (rows - 1)`
/// below the horizon and column v looks `gamma - alpha + v * 2 alpha / (cols - 1)`
/// in azimuth (counter-clockwise from +x).
struct CameraRig
{
    double l = 0.0;     ///< camera x (east) in the deck frame, meters
    double d = 0.0;     ///< camera y (north) in the deck frame, meters
    double h = 1.0;     ///< height above the deck plane, meters
    double theta = 0.0; ///< optical axis depression below horizontal, radians
    double gamma = 0.0; ///< yaw, radians
    double alpha = 0.0; ///< half aperture, radians
    int rows = 2;       ///< m
    int cols = 2;       ///< n

    double row_step() const { return 2.0 * alpha / (rows - 1); }
    double col_step() const { return 2.0 * alpha / (cols - 1); }
};

/// Throws PreconditionViolation if any CameraRig invariant is broken.
void validate_rig(const CameraRig &rig);

/// Point on the deck plane z = 0 (x east, y north), meters.
struct GroundPoint
{
    double x = 0.0;
    double y = 0.0;
};

/// Subpixel position in the source image: u = row, v = col.
struct SourcePixel
{
    double u = 0.0;
    double v = 0.0;
};

/// Axis-aligned target grid for an orthophoto. Row 0 is the northern edge;
/// rows advance south and columns advance east.
struct OrthoGrid
{
    LocalPoint origin; ///< ground position of the center of cell (0, 0)
    double gsd = 0.0;  ///< meters per cell
    int rows = 1;
    int cols = 1;

    GroundPoint cell_center(int row, int col) const
    {
        return {origin.east + col * gsd, origin.north - row * gsd};
    }
};

/// Forward IPM: ground point to source pixel. nullopt means out of view
/// (directly below the camera, outside the azimuth field, or outside the
/// row/column range).
std::optional<SourcePixel> ipm_pixel(const CameraRig &rig, const GroundPoint &g);

/// Inverse IPM. nullopt means the pixel's ray does not descend below the
/// horizon. Rows past the nadir (depression > 90 deg) resolve behind the
/// camera. Throws PreconditionViolation outside the pixel range.
std::optional<GroundPoint> ground_of_pixel(const CameraRig &rig, double u, double v);

/// Perspective-corrected view of `src` on `grid`. Cells whose ground point is
/// out of view, or whose source neighbourhood is masked, are mask-invalid.
/// Throws DimensionMismatch unless src is rig.cols x rig.rows.
Raster render_orthophoto(const CameraRig &rig, const Raster &src, const OrthoGrid &grid);

/// Ground positions of the four image corners in the order
/// (0,0), (0,n-1), (m-1,n-1), (m-1,0). nullopt when the top row reaches the
/// horizon (unbounded footprint).
std::optional<std::array<GroundPoint, 4>> ground_footprint(const CameraRig &rig);

struct GroundBox
{
    double min_x = 0.0;
    double max_x = 0.0;
    double min_y = 0.0;
    double max_y = 0.0;

    void expand(const GroundPoint &p);
    void expand(const GroundBox &b);
};

/// Bounding box of the ground region ipm_pixel can map into the image,
/// optionally clipped at `max_range_m` horizontal distance from the camera.
/// Throws FootprintUnbounded when the footprint reaches the horizon and no
/// clip range is given.
GroundBox footprint_box(const CameraRig &rig, std::optional<double> max_range_m = std::nullopt);

/// Smallest grid at `gsd` that covers `box` and places `camera` exactly on a
/// cell center.
OrthoGrid grid_covering(const GroundBox &box, const GroundPoint &camera, double gsd);

/// Ground distance covered by one pixel at the image center: slant range
/// along the optical axis times the angular column step.
double nominal_gsd(const CameraRig &rig);

struct FlightHeightPlan
{
    double height_m = 0.0;
    double gsd_m = 0.0;
};

/// Nadir single-shot coverage of a deck of the given width.
FlightHeightPlan plan_flight_height(double deck_width_m, double alpha, int cols);

} // namespace deckfuse
