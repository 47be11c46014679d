#pragma once

#include <string>

namespace deckfuse
{

/// Sphere radius used by the tangent-plane approximation (WGS84 semi-major axis).
inline constexpr double kEarthRadiusM = 6378137.0;

struct GeoPoint
{
    double lat = 0.0; ///< degrees
    double lon = 0.0; ///< degrees

    bool operator==(const GeoPoint &) const = default;
};

/// Meters east/north of an anchor GeoPoint.
struct LocalPoint
{
    double east = 0.0;
    double north = 0.0;

    bool operator==(const LocalPoint &) const = default;
};

struct GeoBBox
{
    double min_lat = 0.0;
    double min_lon = 0.0;
    double max_lat = 0.0;
    double max_lon = 0.0;
};

/// Geotag attached to every captured image.
struct ImageGeoTag
{
    double lat = 0.0;
    double lon = 0.0;
    double alt_m = 0.0;
    double heading_deg = 0.0;
    std::string timestamp;

    GeoPoint position() const { return {lat, lon}; }
};

/// Equirectangular projection onto the plane tangent at `anchor`. The cosine
/// term uses the anchor latitude so the map is exactly invertible.
/// Throws OutOfRange if p is more than 1 degree from the anchor on either axis
/// or if either point is outside the supported latitude/longitude band.
LocalPoint to_local(const GeoPoint &p, const GeoPoint &anchor);

/// Algebraic inverse of to_local. Throws OutOfRange beyond 100 km.
GeoPoint to_geo(const LocalPoint &p, const GeoPoint &anchor);

/// Boundary-inclusive containment.
bool bbox_contains(const GeoBBox &b, const GeoPoint &p);

/// Throws OutOfRange unless min <= max on both axes and all values are finite.
void validate_bbox(const GeoBBox &b);

} // namespace deckfuse
