#include <deckfuse/error.hpp>
#include <deckfuse/geodesy.hpp>

#include <cmath>
#include <numbers>

namespace deckfuse
{

namespace
{

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMaxAnchorLat = 89.0;
constexpr double kMaxOffsetDeg = 1.0;
constexpr double kMaxOffsetM = 100000.0;

void check_geo(const GeoPoint &p, const char *what)
{
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || std::abs(p.lat) > 90.0 || std::abs(p.lon) > 180.0)
        throw Error(ErrorCode::OutOfRange, std::string(what) + " outside WGS84 bounds");
}

void check_anchor(const GeoPoint &anchor)
{
    check_geo(anchor, "anchor");
    if (std::abs(anchor.lat) > kMaxAnchorLat)
        throw Error(ErrorCode::OutOfRange, "polar anchors are not supported");
}

} // namespace

LocalPoint to_local(const GeoPoint &p, const GeoPoint &anchor)
{
    check_anchor(anchor);
    check_geo(p, "point");
    const double dlat = p.lat - anchor.lat;
    const double dlon = p.lon - anchor.lon;
    if (std::abs(dlat) >= kMaxOffsetDeg || std::abs(dlon) >= kMaxOffsetDeg)
        throw Error(ErrorCode::OutOfRange, "point is more than 1 degree from the anchor");
    return {dlon * kDegToRad * kEarthRadiusM * std::cos(anchor.lat * kDegToRad), dlat * kDegToRad * kEarthRadiusM};
}

GeoPoint to_geo(const LocalPoint &p, const GeoPoint &anchor)
{
    check_anchor(anchor);
    if (!std::isfinite(p.east) || !std::isfinite(p.north) || std::abs(p.east) >= kMaxOffsetM ||
        std::abs(p.north) >= kMaxOffsetM)
        throw Error(ErrorCode::OutOfRange, "local offset exceeds 100 km");
    const double lat = anchor.lat + p.north / (kDegToRad * kEarthRadiusM);
    const double lon = anchor.lon + p.east / (kDegToRad * kEarthRadiusM * std::cos(anchor.lat * kDegToRad));
    GeoPoint out{lat, lon};
    check_geo(out, "result");
    return out;
}

bool bbox_contains(const GeoBBox &b, const GeoPoint &p)
{
    return b.min_lat <= p.lat && p.lat <= b.max_lat && b.min_lon <= p.lon && p.lon <= b.max_lon;
}

void validate_bbox(const GeoBBox &b)
{
    if (!std::isfinite(b.min_lat) || !std::isfinite(b.max_lat) || !std::isfinite(b.min_lon) ||
        !std::isfinite(b.max_lon))
        throw Error(ErrorCode::OutOfRange, "bbox values must be finite");
    if (b.min_lat > b.max_lat || b.min_lon > b.max_lon)
        throw Error(ErrorCode::OutOfRange, "bbox min must not exceed max (antimeridian wrap unsupported)");
}

} // namespace deckfuse
