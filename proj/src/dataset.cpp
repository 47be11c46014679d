#include <deckfuse/dataset.hpp>
#include <deckfuse/error.hpp>
#include <deckfuse/records_json.hpp>

#include <cmath>
#include <cstdio>
#include <numbers>

namespace deckfuse
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr int kCloseupSize = 64;
constexpr double kCloseupHeightM = 1.0;

CameraRig flight_rig(const SynthOptions &o)
{
    CameraRig rig;
    rig.h = o.height_m;
    rig.theta = o.pitch_deg * kDegToRad;
    rig.alpha = o.aperture_deg * kDegToRad;
    rig.rows = o.image_size;
    rig.cols = o.image_size;
    validate_rig(rig);
    return rig;
}

// Top-down crop of the scene texture, one texel per pixel, north up.
Raster closeup(const GroundScene &scene, const GroundPoint &center)
{
    Raster out(kCloseupSize, kCloseupSize, 1);
    const double step = 1.0 / scene.texel_per_m;
    const double half = 0.5 * (kCloseupSize - 1);
    for (int row = 0; row < kCloseupSize; ++row)
    {
        for (int col = 0; col < kCloseupSize; ++col)
        {
            const GroundPoint g{center.x + (col - half) * step, center.y - (row - half) * step};
            const auto v = scene.value_at(g);
            out.set(col, row, 0, v ? static_cast<std::uint8_t>(std::lround(*v)) : 0);
        }
    }
    return out;
}

ImageGeoTag tag_at(const GeoPoint &p, double alt_m, const char *timestamp)
{
    ImageGeoTag t;
    t.lat = p.lat;
    t.lon = p.lon;
    t.alt_m = alt_m;
    t.heading_deg = 0.0;
    t.timestamp = timestamp;
    return t;
}

void write_json(const fs::path &path, const json &j)
{
    const std::string s = j.dump(2) + "\n";
    write_file_atomic(path.string(), std::span(reinterpret_cast<const std::uint8_t *>(s.data()), s.size()));
}

json point_json(const GroundPoint &g, const GeoPoint &p)
{
    return {{"x_m", g.x}, {"y_m", g.y}, {"lat", p.lat}, {"lon", p.lon}};
}

std::string defect_note(DefectKind kind)
{
    return kind == DefectKind::Delamination ? "hollow under hammer sounding; close-up attached"
                                            : "hairline surface crack; close-up attached";
}

} // namespace

SynthDataset make_synth_dataset(const SynthOptions &o)
{
    if (o.views < 1 || o.defects < 0)
        throw Error(ErrorCode::PreconditionViolation, "need at least one view and a non-negative defect count");
    const CameraRig rig = flight_rig(o);
    const GroundBox box = footprint_box(rig);
    const double footprint = box.max_x - box.min_x;
    const double length = footprint + (o.views - 1) * (1.0 - o.overlap) * footprint + 0.5;

    SynthDataset data;
    data.scene = make_deck_scene(length, o.deck_width_m, o.texel_per_m, o.defects, o.seed, o.style);
    data.scene.anchor = o.anchor;
    auto [plan, views] = make_flight(data.scene, rig, o.overlap, o.gps_noise_m, o.seed + 1, o.views);
    data.plan = std::move(plan);
    data.views = std::move(views);

    data.closeup_rig.h = kCloseupHeightM;
    data.closeup_rig.theta = std::numbers::pi / 2.0;
    data.closeup_rig.alpha = std::atan(0.5 * kCloseupSize / o.texel_per_m / kCloseupHeightM);
    data.closeup_rig.rows = kCloseupSize;
    data.closeup_rig.cols = kCloseupSize;

    SynthRng rng(o.seed + 2);
    int k = 0;
    for (const auto &defect : data.scene.defects)
    {
        const GeoPoint truth = to_geo({defect.position.x, defect.position.y}, data.scene.anchor);
        LocalPoint tagged{defect.position.x, defect.position.y};
        if (o.gps_noise_m > 0.0)
        {
            tagged.east += o.gps_noise_m * rng.normal();
            tagged.north += o.gps_noise_m * rng.normal();
        }
        char stamp[32];
        std::snprintf(stamp, sizeof stamp, "2017-06-21T09:%02d:00Z", k++ % 60);
        data.defects.push_back({defect.kind, defect.position, truth});
        data.closeups.push_back(closeup(data.scene, defect.position));
        data.closeup_tags.push_back(tag_at(to_geo(tagged, data.scene.anchor), kCloseupHeightM, stamp));
    }
    return data;
}

void write_synth_dataset(const SynthDataset &data, const SynthOptions &o, const fs::path &out)
{
    std::error_code ec;
    fs::create_directories(out / "views", ec);
    fs::create_directories(out / "closeups", ec);

    IngestManifest phase1;
    phase1.bridge_id = o.bridge_id;
    phase1.phase = 1;
    phase1.sensor = o.style == SceneStyle::Featureless ? Sensor::Infrared : Sensor::Optical;
    CameraRig camera = data.plan.rig_template;
    camera.l = camera.d = 0.0;
    for (std::size_t i = 0; i < data.views.size(); ++i)
    {
        char name[32];
        std::snprintf(name, sizeof name, "views/view_%03zu.ppm", i);
        write_file_atomic((out / name).string(), save_pnm(data.views[i].image));
        phase1.images.push_back({name, data.views[i].tag, camera, std::nullopt, std::nullopt, std::nullopt});
    }

    IngestManifest phase2;
    phase2.bridge_id = o.bridge_id;
    phase2.phase = 2;
    phase2.sensor = Sensor::Optical;
    for (std::size_t i = 0; i < data.defects.size(); ++i)
    {
        char name[32];
        std::snprintf(name, sizeof name, "closeups/defect_%02zu.ppm", i);
        write_file_atomic((out / name).string(), save_pnm(data.closeups[i]));
        const DefectType type =
            data.defects[i].kind == DefectKind::Crack ? DefectType::Crack : DefectType::Delamination;
        phase2.images.push_back({name, data.closeup_tags[i], data.closeup_rig, defect_note(data.defects[i].kind), type,
                                 std::nullopt});
    }

    const auto write_text = [&](const char *file, const std::string &s) {
        write_file_atomic((out / file).string(), std::span(reinterpret_cast<const std::uint8_t *>(s.data()), s.size()));
    };
    write_text("phase1.json", manifest_to_json(phase1));
    write_text("phase2.json", manifest_to_json(phase2));
    write_text("camera.json", camera_to_json(camera));

    json waypoints = json::array();
    for (std::size_t i = 0; i < data.views.size(); ++i)
    {
        const GroundPoint w = data.plan.waypoints[i];
        json entry = point_json(w, to_geo({w.x, w.y}, data.scene.anchor));
        entry["tag_lat"] = data.views[i].tag.lat;
        entry["tag_lon"] = data.views[i].tag.lon;
        waypoints.push_back(std::move(entry));
    }
    json defects = json::array();
    for (std::size_t i = 0; i < data.defects.size(); ++i)
    {
        json entry = point_json(data.defects[i].ground, data.defects[i].geo);
        entry["kind"] = to_string(data.defects[i].kind);
        entry["tag_lat"] = data.closeup_tags[i].lat;
        entry["tag_lon"] = data.closeup_tags[i].lon;
        defects.push_back(std::move(entry));
    }
    json fiducials = json::array();
    for (const auto &f : data.scene.fiducials)
        fiducials.push_back(point_json(f, to_geo({f.x, f.y}, data.scene.anchor)));

    write_json(out / "truth.json",
               {{"bridge_id", o.bridge_id},
                {"seed", o.seed},
                {"anchor", {{"lat", data.scene.anchor.lat}, {"lon", data.scene.anchor.lon}}},
                {"deck", {{"length_m", data.scene.max_x}, {"width_m", o.deck_width_m}}},
                {"gsd_m", nominal_gsd(data.plan.rig_template)},
                {"footprint_length_m", data.plan.footprint_length_m},
                {"spacing_m", data.plan.spacing_m},
                {"gps_noise_m", o.gps_noise_m},
                {"waypoints", waypoints},
                {"defects", defects},
                {"fiducials", fiducials}});
}

namespace
{

struct DemoBridge
{
    const char *id;
    const char *name;
    GeoPoint location;
    Condition condition;
};

// Invented fixture: five decks around Lincoln, Nebraska.
constexpr DemoBridge kDemoBridges[] = {
    {"NE-2-0312", "N-2 over Salt Creek", {40.7905, -96.6412}, Condition::Good},
    {"NE-77-0108", "US-77 over Haines Branch", {40.7442, -96.7321}, Condition::Fair},
    {"NE-6-0421", "US-6 over Oak Creek", {40.8634, -96.7455}, Condition::Good},
    {"NE-34-0917", "N-34 over Middle Creek", {40.8511, -96.7859}, Condition::Poor},
    {"NE-80-1203", "I-80 over Little Salt Creek", {40.8957, -96.6718}, Condition::Fair},
};

SurfaceMapMeta stitch_into(Store &store, const SynthDataset &data, const std::string &bridge_id,
                           const std::string &map_id, Sensor sensor)
{
    std::vector<GeoTaggedView> views;
    for (const auto &v : data.views)
    {
        CameraRig rig = v.rig;
        rig.l = rig.d = 0.0;
        views.push_back({v.image, rig, v.tag, std::nullopt});
    }
    StitchResult stitched = stitch_views(views);
    SurfaceMapMeta meta{map_id,
                        bridge_id,
                        1,
                        sensor,
                        stitched.map.anchor,
                        stitched.map.anchor_row,
                        stitched.map.anchor_col,
                        stitched.map.gsd,
                        stitched.map.mosaic.height(),
                        stitched.map.mosaic.width()};
    store.add_map(meta, std::move(stitched.map.mosaic));
    return meta;
}

// Phase-2 hammer-sounding chart: gray deck with dark disks over hollow areas.
void add_sounding_map(Store &store, const SynthDataset &data, const std::string &bridge_id, const std::string &map_id)
{
    const double gsd = 0.05;
    const GroundScene &scene = data.scene;
    const int cols = static_cast<int>(std::ceil((scene.max_x - scene.min_x) / gsd)) + 1;
    const int rows = static_cast<int>(std::ceil((scene.max_y - scene.min_y) / gsd)) + 1;
    Raster chart(cols, rows, 1, 190);
    for (const auto &d : data.defects)
    {
        if (d.kind != DefectKind::Delamination)
            continue;
        for (int row = 0; row < rows; ++row)
            for (int col = 0; col < cols; ++col)
                if (std::hypot(scene.min_x + col * gsd - d.ground.x, scene.max_y - row * gsd - d.ground.y) <= 0.35)
                    chart.set(col, row, 0, 60);
    }
    // The deck-frame origin is the anchor.
    const SurfaceMapMeta meta{map_id, bridge_id, 2, Sensor::HammerSounding, scene.anchor, scene.max_y / gsd,
                              -scene.min_x / gsd, gsd, rows, cols};
    store.add_map(meta, std::move(chart));
}

} // namespace

void seed_demo_store(Store &store)
{
    for (const auto &b : kDemoBridges)
        if (!store.find_bridge(b.id))
            store.put_bridge({b.id, b.name, b.location, b.condition, {}});

    const DemoBridge &poor = kDemoBridges[3];
    SynthOptions options;
    options.views = 4;
    options.image_size = 101;
    options.defects = 4;
    options.seed = 2017;
    options.bridge_id = poor.id;
    options.anchor = poor.location;

    const std::string prefix = poor.id;
    if (!store.find_map(prefix + "-optical"))
    {
        const SynthDataset optical = make_synth_dataset(options);
        stitch_into(store, optical, poor.id, prefix + "-optical", Sensor::Optical);
        add_sounding_map(store, optical, poor.id, prefix + "-sounding");
        for (std::size_t i = 0; i < optical.defects.size(); ++i)
        {
            DefectRecord record;
            record.defect_id = store.next_defect_id(poor.id);
            record.bridge_id = poor.id;
            record.position = optical.closeup_tags[i].position();
            record.defect_type =
                optical.defects[i].kind == DefectKind::Crack ? DefectType::Crack : DefectType::Delamination;
            record.sensor = record.defect_type == DefectType::Crack ? Sensor::Optical : Sensor::HammerSounding;
            record.note = defect_note(optical.defects[i].kind);
            store.add_defect(record, optical.closeups[i]);
        }

        options.style = SceneStyle::Featureless;
        const SynthDataset infrared = make_synth_dataset(options);
        stitch_into(store, infrared, poor.id, prefix + "-infrared", Sensor::Infrared);
    }

    const DemoBridge &fair = kDemoBridges[1];
    if (store.query_defects({fair.location.lat, fair.location.lon, fair.location.lat, fair.location.lon}).empty())
    {
        DefectRecord spall;
        spall.defect_id = store.next_defect_id(fair.id);
        spall.bridge_id = fair.id;
        spall.position = fair.location;
        spall.defect_type = DefectType::Spall;
        spall.sensor = Sensor::Optical;
        spall.note = "shallow spall near the east joint, no close-up";
        store.add_defect(spall);
    }
    store.persist();
}

} // namespace deckfuse
