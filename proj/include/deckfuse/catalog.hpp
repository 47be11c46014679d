#pragma once

#include <deckfuse/geodesy.hpp>
#include <deckfuse/projection.hpp>
#include <deckfuse/raster.hpp>
#include <deckfuse/stitcher.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deckfuse
{

enum class Condition
{
    Good,
    Fair,
    Poor,
};

enum class Sensor
{
    Optical,
    Infrared,
    HammerSounding,
    Other,
};

enum class DefectType
{
    Crack,
    Delamination,
    Spall,
    Other,
};

std::string_view to_string(Condition c);
std::string_view to_string(Sensor s);
std::string_view to_string(DefectType t);
/// green / yellow / red
std::string_view flag_color(Condition c);

// Parsers throw InvalidManifest on unknown names.
Condition parse_condition(std::string_view s);
Sensor parse_sensor(std::string_view s);
DefectType parse_defect_type(std::string_view s);

struct BridgeRecord
{
    std::string bridge_id;
    std::string name;
    GeoPoint location;
    Condition condition = Condition::Good;
    std::vector<std::string> surface_map_ids;

    bool operator==(const BridgeRecord &) const = default;
};

struct SurfaceMapMeta
{
    std::string map_id;
    std::string bridge_id;
    int phase = 1;
    Sensor sensor = Sensor::Optical;
    GeoPoint anchor;
    double anchor_row = 0.0;
    double anchor_col = 0.0;
    double gsd_m = 0.0;
    int rows = 0;
    int cols = 0;

    bool operator==(const SurfaceMapMeta &) const = default;
};

struct DefectRecord
{
    std::string defect_id;
    std::string bridge_id;
    GeoPoint position;
    DefectType defect_type = DefectType::Other;
    Sensor sensor = Sensor::Optical;
    std::string note;
    std::optional<std::string> image_id;

    bool operator==(const DefectRecord &) const = default;
};

/// Mosaic pixel (row, col) to geographic position. Throws OutOfRange
/// outside [0, rows) x [0, cols).
GeoPoint map_pixel_to_geo(const SurfaceMapMeta &meta, double row, double col);

struct MapPixel
{
    double row = 0.0;
    double col = 0.0;
};

/// Inverse of map_pixel_to_geo. Throws OutOfRange when the point falls
/// outside the mosaic's ground extent.
MapPixel geo_to_map_pixel(const SurfaceMapMeta &meta, const GeoPoint &p);

/// Camera parameter file: JSON object with l_m, d_m, h_m, pitch_deg,
/// yaw_deg, aperture_deg, rows, cols. Throws InvalidManifest.
CameraRig parse_camera(std::string_view json_text);
std::string camera_to_json(const CameraRig &rig);

struct ManifestEntry
{
    std::filesystem::path file; ///< resolved against the manifest's directory
    ImageGeoTag tag;
    CameraRig camera;
    std::optional<std::string> note;
    std::optional<DefectType> defect_type;
    /// Operator placement onto the previous entry (stitch batches only).
    std::optional<Similarity2D> transform;
};

struct IngestManifest
{
    std::string bridge_id;
    int phase = 1;
    Sensor sensor = Sensor::Optical;
    std::vector<ManifestEntry> images;
};

/// Relative file paths are resolved against `base_dir`. Throws InvalidManifest.
IngestManifest parse_manifest(std::string_view json_text, const std::filesystem::path &base_dir);
IngestManifest load_manifest(const std::filesystem::path &path);
/// File paths are written as given (relative paths stay relative).
std::string manifest_to_json(const IngestManifest &manifest);

enum class IngestMode
{
    StitchToMap,
    DefectRecords,
};

struct IngestReport
{
    std::vector<std::string> created_ids;
    /// Per image: "Reference", "FeatureBased", "GpsFallback", "Manual" for
    /// stitch batches, "Record" for defect batches.
    std::vector<std::string> methods;
    std::vector<int> inlier_counts;
};

/// Flat-file catalog: JSON indexes plus PNM blobs under one root directory.
/// Mutations change the in-memory state; persist() writes it out, one
/// atomic rename per file, blobs before the indexes that reference them.
/// Single writer; concurrent readers need external synchronisation.
class Store
{
  public:
    /// Creates the directory when absent. Throws CorruptStore on unparseable
    /// or inconsistent index files, IoFailure when the root is unusable.
    static Store open(const std::filesystem::path &root);

    void persist();

    const std::filesystem::path &root() const noexcept { return root_; }

    /// Sorted by id.
    std::vector<BridgeRecord> bridges() const;
    std::vector<DefectRecord> defects() const;
    std::vector<SurfaceMapMeta> maps() const;

    const BridgeRecord *find_bridge(std::string_view id) const;
    const SurfaceMapMeta *find_map(std::string_view id) const;
    const DefectRecord *find_defect(std::string_view id) const;

    /// Exactly the records inside the (boundary-inclusive) box, by id.
    std::vector<BridgeRecord> query_bridges(const GeoBBox &box) const;
    std::vector<DefectRecord> query_defects(const GeoBBox &box) const;

    /// Inserts or replaces by bridge_id. The surface_map_ids must name
    /// maps owned by this bridge.
    void put_bridge(BridgeRecord record);

    /// Throws DuplicateId when the id exists. With an image, image_id
    /// defaults to the defect id.
    void add_defect(DefectRecord record, std::optional<Raster> image = std::nullopt);

    /// Registers a mosaic and links it to its bridge (which must exist).
    /// Throws DuplicateId when the map id exists.
    void add_map(SurfaceMapMeta meta, Raster mosaic);

    /// Throws NotFound for unknown ids.
    Raster map_image(std::string_view map_id) const;
    std::optional<Raster> defect_image(std::string_view defect_id) const;

    /// Next free id of the form <bridge>-dNNNN.
    std::string next_defect_id(std::string_view bridge_id) const;

    bool operator==(const Store &other) const;

  private:
    explicit Store(std::filesystem::path root) : root_(std::move(root)) {}

    std::filesystem::path root_;
    std::map<std::string, BridgeRecord, std::less<>> bridges_;
    std::map<std::string, SurfaceMapMeta, std::less<>> maps_;
    std::map<std::string, DefectRecord, std::less<>> defects_;
    // Blobs not yet on disk.
    std::map<std::string, Raster, std::less<>> pending_mosaics_;
    std::map<std::string, Raster, std::less<>> pending_images_;
};

/// Phase-1 batches become one surface map (id `map_id`, anchored at the
/// first image's geotag); phase-2 batches become one defect record per
/// entry, positioned at the entry's geotag, with the image kept as its
/// close-up. A missing bridge record is created (condition Good, located
/// at the first geotag). All-or-nothing: every input is read and processed
/// before anything is written. Throws MissingFile, EmptyInput.
IngestReport ingest_batch(Store &store, const IngestManifest &manifest, IngestMode mode,
                          const std::string &map_id = {}, int tau = kDefaultTau);

} // namespace deckfuse
