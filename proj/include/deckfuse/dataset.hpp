#pragma once

#include <deckfuse/catalog.hpp>
#include <deckfuse/synth.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace deckfuse
{

struct SynthOptions
{
    int views = 8;
    double pitch_deg = 60.0;
    double aperture_deg = 20.0;
    double height_m = 10.0;
    double overlap = 0.6;
    double gps_noise_m = 0.0;
    std::uint64_t seed = 1;
    int image_size = 151;
    double deck_width_m = 8.0;
    int defects = 6;
    double texel_per_m = 50.0;
    std::string bridge_id = "synth-bridge";
    GeoPoint anchor{40.8136, -96.7026};
    SceneStyle style = SceneStyle::Textured;
};

struct TruthDefect
{
    DefectKind kind = DefectKind::Delamination;
    GroundPoint ground;
    GeoPoint geo;
};

/// Everything a synthetic two-phase run produced, in memory.
struct SynthDataset
{
    GroundScene scene;
    FlightPlan plan;
    std::vector<FlightView> views;
    std::vector<TruthDefect> defects;
    /// Close-up per defect and the (possibly noisy) geotag it was filed with.
    std::vector<Raster> closeups;
    std::vector<ImageGeoTag> closeup_tags;
    CameraRig closeup_rig;
};

/// Deck scene sized to hold the requested flight, the flight itself, and a
/// top-down close-up of every defect geotagged at its true position plus
/// the same GPS noise as the flight. Seed-deterministic.
SynthDataset make_synth_dataset(const SynthOptions &options);

/// Writes views/view_NNN.ppm, closeups/defect_NN.ppm, phase1.json (stitch
/// manifest), phase2.json (defect manifest), camera.json and truth.json.
void write_synth_dataset(const SynthDataset &data, const SynthOptions &options, const std::filesystem::path &out);

/// Five bridges around Lincoln, Nebraska; one in Poor condition carrying
/// three surface maps (phase-1 optical, phase-1 infrared, phase-2 hammer
/// sounding) and a set of geotagged defects with close-ups. Persists.
void seed_demo_store(Store &store);

} // namespace deckfuse
