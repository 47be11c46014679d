#pragma once

#include <deckfuse/geodesy.hpp>
#include <deckfuse/projection.hpp>
#include <deckfuse/raster.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace deckfuse
{

enum class DefectKind
{
    Crack,
    Delamination,
};

std::string_view to_string(DefectKind kind);

struct SceneDefect
{
    GroundPoint position;
    DefectKind kind = DefectKind::Delamination;
};

/// Textured ground rectangle. Texel (col, row) sits at
/// x = min_x + col / texel_per_m, y = max_y - row / texel_per_m.
struct GroundScene
{
    Raster texture;
    double min_x = 0.0;
    double max_x = 0.0;
    double min_y = 0.0;
    double max_y = 0.0;
    double texel_per_m = 1.0;
    /// Geographic position of the deck-frame origin.
    GeoPoint anchor{40.8136, -96.7026};
    std::vector<SceneDefect> defects;
    /// Centers of bright circular targets painted on the deck.
    std::vector<GroundPoint> fiducials;

    /// Bilinear texture value; nullopt outside the extent.
    std::optional<double> value_at(const GroundPoint &g) const;
};

/// Seeded generator shared by every synthetic producer. Uses raw mt19937_64
/// output only, so sequences are identical on every platform.
class SynthRng
{
  public:
    explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

  private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

/// Oracle for the IPM formula: projects through a world-to-camera rotation
/// (pitch, yaw, zero roll) and camera center as a 3x4 matrix, then reads the
/// ray's elevation and azimuth on the camera's equiangular pixel grid.
std::optional<SourcePixel> pinhole_project(const CameraRig &rig, const GroundPoint &g);

inline constexpr std::uint8_t kSkyValue = 200;

/// Renders the tilted view of `scene` seen by `rig` (single channel). Rays
/// that do not descend get kSkyValue; ground outside the scene is black.
Raster render_view(const CameraRig &rig, const GroundScene &scene);

enum class SceneStyle
{
    Textured,    ///< speckle, lane markings, calibration checkerboard
    Featureless, ///< flat gray, like a low-contrast thermal frame
};

/// Bridge deck spanning x in [0, length], y in [-width/2, width/2] with lane
/// markings, a calibration checkerboard, fiducial targets, speckle, and
/// `n_defects` delamination blobs / crack polylines (alternating).
GroundScene make_deck_scene(double length_m, double width_m, double texel_per_m, int n_defects, std::uint64_t seed,
                            SceneStyle style = SceneStyle::Textured);

/// Smooth-edged checkerboard: squares of `square_m` meters whose corners lie
/// on integer multiples of square_m. Intensity is
/// 128 + 100 tanh(sharpness sin(pi x / s) sin(pi y / s)).
GroundScene make_checkerboard_scene(const GroundBox &extent, double square_m, double texel_per_m,
                                    double sharpness = 3.0);

struct FlightPlan
{
    CameraRig rig_template;
    std::vector<GroundPoint> waypoints;
    std::vector<double> headings; ///< yaw per waypoint, radians
    double overlap = 0.0;
    double footprint_length_m = 0.0;
    double spacing_m = 0.0;
};

struct FlightView
{
    CameraRig rig;
    Raster image;
    ImageGeoTag tag;
};

/// Straight pass along +x over the deck centerline. Waypoints are spaced by
/// (1 - overlap) times the along-track footprint length; the view count is
/// `views` when given, otherwise as many as fit inside the scene. Geotags
/// are true positions plus seeded Gaussian noise of `gps_noise_sigma_m`.
/// Throws FootprintUnbounded if the top rows reach the horizon.
std::pair<FlightPlan, std::vector<FlightView>> make_flight(const GroundScene &scene, const CameraRig &rig_template,
                                                           double overlap, double gps_noise_sigma_m,
                                                           std::uint64_t seed,
                                                           std::optional<int> views = std::nullopt);

/// Along-track footprint length for a flight with rig heading +x.
double footprint_length(const CameraRig &rig);

} // namespace deckfuse
