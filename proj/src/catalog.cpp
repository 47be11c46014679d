#include <deckfuse/catalog.hpp>
#include <deckfuse/error.hpp>
#include <deckfuse/records_json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace deckfuse
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

constexpr double kDegToRad = std::numbers::pi / 180.0;

[[noreturn]] void bad(const std::string &message)
{
    throw Error(ErrorCode::InvalidManifest, message);
}

const json &field(const json &j, const char *key)
{
    if (!j.is_object())
        bad("expected an object");
    const auto it = j.find(key);
    if (it == j.end())
        bad(std::string("missing key '") + key + "'");
    return *it;
}

double number(const json &j, const char *key)
{
    const json &v = field(j, key);
    if (!v.is_number())
        bad(std::string("'") + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        bad(std::string("'") + key + "' must be finite");
    return x;
}

int integer(const json &j, const char *key)
{
    const json &v = field(j, key);
    if (!v.is_number_integer())
        bad(std::string("'") + key + "' must be an integer");
    return v.get<int>();
}

std::string text(const json &j, const char *key)
{
    const json &v = field(j, key);
    if (!v.is_string())
        bad(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

std::optional<std::string> optional_text(const json &j, const char *key)
{
    const auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return std::nullopt;
    if (!it->is_string())
        bad(std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

GeoPoint geo(double lat, double lon)
{
    if (std::abs(lat) > 90.0 || std::abs(lon) > 180.0)
        bad("coordinates outside WGS84 bounds");
    return {lat, lon};
}

// Ids become file names.
void check_id(const std::string &id, const char *what)
{
    const bool ok = !id.empty() && id.size() <= 128 && id != "." && id != ".." &&
                    std::all_of(id.begin(), id.end(), [](char c) {
                        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
                    });
    if (!ok)
        bad(std::string(what) + " must be 1-128 characters of [A-Za-z0-9._-]");
}

std::string dump(const json &j)
{
    return j.dump(2) + "\n";
}

void write_text(const fs::path &path, const std::string &s)
{
    write_file_atomic(path.string(), std::span(reinterpret_cast<const std::uint8_t *>(s.data()), s.size()));
}

json read_index(const fs::path &path)
{
    const Bytes bytes = read_file(path.string());
    try
    {
        return json::parse(bytes.begin(), bytes.end());
    }
    catch (const json::exception &e)
    {
        throw Error(ErrorCode::CorruptStore, path.string() + ": " + e.what());
    }
}

Raster load_raster_with_mask(const fs::path &image, const fs::path &mask)
{
    Raster r = load_pnm(read_file(image.string()));
    if (fs::exists(mask))
    {
        attach_mask(r, load_pnm(read_file(mask.string())));
        if (r.valid_count() == static_cast<std::size_t>(r.width()) * r.height())
            r.clear_mask();
    }
    return r;
}

template <typename Map>
auto values(const Map &m)
{
    std::vector<typename Map::mapped_type> out;
    out.reserve(m.size());
    for (const auto &[key, value] : m)
        out.push_back(value);
    return out;
}

template <typename Map, typename Key>
const typename Map::mapped_type *lookup(const Map &m, const Key &key)
{
    const auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
}

} // namespace

std::string_view to_string(Condition c)
{
    switch (c)
    {
    case Condition::Good: return "Good";
    case Condition::Fair: return "Fair";
    case Condition::Poor: return "Poor";
    }
    return "Good";
}

std::string_view flag_color(Condition c)
{
    switch (c)
    {
    case Condition::Good: return "green";
    case Condition::Fair: return "yellow";
    case Condition::Poor: return "red";
    }
    return "green";
}

std::string_view to_string(Sensor s)
{
    switch (s)
    {
    case Sensor::Optical: return "optical";
    case Sensor::Infrared: return "infrared";
    case Sensor::HammerSounding: return "hammer_sounding";
    case Sensor::Other: return "other";
    }
    return "other";
}

std::string_view to_string(DefectType t)
{
    switch (t)
    {
    case DefectType::Crack: return "crack";
    case DefectType::Delamination: return "delamination";
    case DefectType::Spall: return "spall";
    case DefectType::Other: return "other";
    }
    return "other";
}

Condition parse_condition(std::string_view s)
{
    for (Condition c : {Condition::Good, Condition::Fair, Condition::Poor})
        if (to_string(c) == s)
            return c;
    bad("unknown condition '" + std::string(s) + "'");
}

Sensor parse_sensor(std::string_view s)
{
    for (Sensor v : {Sensor::Optical, Sensor::Infrared, Sensor::HammerSounding, Sensor::Other})
        if (to_string(v) == s)
            return v;
    bad("unknown sensor '" + std::string(s) + "'");
}

DefectType parse_defect_type(std::string_view s)
{
    for (DefectType t : {DefectType::Crack, DefectType::Delamination, DefectType::Spall, DefectType::Other})
        if (to_string(t) == s)
            return t;
    bad("unknown defect type '" + std::string(s) + "'");
}

// ---- JSON shapes ----------------------------------------------------------

json to_json(const BridgeRecord &b)
{
    return {{"bridge_id", b.bridge_id},
            {"name", b.name},
            {"lat", b.location.lat},
            {"lon", b.location.lon},
            {"condition", to_string(b.condition)},
            {"surface_map_ids", b.surface_map_ids}};
}

json to_json(const SurfaceMapMeta &m)
{
    return {{"map_id", m.map_id},         {"bridge_id", m.bridge_id},   {"phase", m.phase},
            {"sensor", to_string(m.sensor)}, {"anchor_lat", m.anchor.lat}, {"anchor_lon", m.anchor.lon},
            {"anchor_row", m.anchor_row}, {"anchor_col", m.anchor_col}, {"gsd_m", m.gsd_m},
            {"rows", m.rows},             {"cols", m.cols}};
}

json to_json(const DefectRecord &d)
{
    return {{"defect_id", d.defect_id},
            {"bridge_id", d.bridge_id},
            {"lat", d.position.lat},
            {"lon", d.position.lon},
            {"defect_type", to_string(d.defect_type)},
            {"sensor", to_string(d.sensor)},
            {"note", d.note},
            {"image_id", d.image_id ? json(*d.image_id) : json(nullptr)}};
}

json to_json(const ImageGeoTag &t)
{
    return {{"lat", t.lat}, {"lon", t.lon}, {"alt_m", t.alt_m}, {"heading_deg", t.heading_deg}, {"timestamp", t.timestamp}};
}

json to_json(const CameraRig &rig)
{
    return {{"l_m", rig.l},
            {"d_m", rig.d},
            {"h_m", rig.h},
            {"pitch_deg", rig.theta / kDegToRad},
            {"yaw_deg", rig.gamma / kDegToRad},
            {"aperture_deg", rig.alpha / kDegToRad},
            {"rows", rig.rows},
            {"cols", rig.cols}};
}

BridgeRecord bridge_from_json(const json &j)
{
    BridgeRecord b;
    b.bridge_id = text(j, "bridge_id");
    check_id(b.bridge_id, "bridge_id");
    b.name = text(j, "name");
    b.location = geo(number(j, "lat"), number(j, "lon"));
    b.condition = parse_condition(text(j, "condition"));
    const json &ids = field(j, "surface_map_ids");
    if (!ids.is_array())
        bad("'surface_map_ids' must be an array");
    for (const auto &id : ids)
    {
        if (!id.is_string())
            bad("'surface_map_ids' must hold strings");
        b.surface_map_ids.push_back(id.get<std::string>());
    }
    return b;
}

SurfaceMapMeta map_meta_from_json(const json &j)
{
    SurfaceMapMeta m;
    m.map_id = text(j, "map_id");
    check_id(m.map_id, "map_id");
    m.bridge_id = text(j, "bridge_id");
    m.phase = integer(j, "phase");
    m.sensor = parse_sensor(text(j, "sensor"));
    m.anchor = geo(number(j, "anchor_lat"), number(j, "anchor_lon"));
    m.anchor_row = number(j, "anchor_row");
    m.anchor_col = number(j, "anchor_col");
    m.gsd_m = number(j, "gsd_m");
    m.rows = integer(j, "rows");
    m.cols = integer(j, "cols");
    if (m.phase != 1 && m.phase != 2)
        bad("phase must be 1 or 2");
    if (!(m.gsd_m > 0.0) || m.rows < 1 || m.cols < 1)
        bad("gsd and mosaic size must be positive");
    if (m.anchor_row < 0.0 || m.anchor_row >= m.rows || m.anchor_col < 0.0 || m.anchor_col >= m.cols)
        bad("anchor pixel outside the mosaic");
    return m;
}

DefectRecord defect_from_json(const json &j)
{
    DefectRecord d;
    d.defect_id = text(j, "defect_id");
    check_id(d.defect_id, "defect_id");
    d.bridge_id = text(j, "bridge_id");
    check_id(d.bridge_id, "bridge_id");
    d.position = geo(number(j, "lat"), number(j, "lon"));
    d.defect_type = parse_defect_type(text(j, "defect_type"));
    d.sensor = parse_sensor(text(j, "sensor"));
    d.note = optional_text(j, "note").value_or("");
    d.image_id = optional_text(j, "image_id");
    if (d.image_id)
        check_id(*d.image_id, "image_id");
    return d;
}

ImageGeoTag geotag_from_json(const json &j)
{
    ImageGeoTag t;
    const GeoPoint p = geo(number(j, "lat"), number(j, "lon"));
    t.lat = p.lat;
    t.lon = p.lon;
    t.alt_m = number(j, "alt_m");
    t.heading_deg = number(j, "heading_deg");
    t.timestamp = text(j, "timestamp");
    return t;
}

CameraRig camera_from_json(const json &j)
{
    CameraRig rig;
    rig.l = number(j, "l_m");
    rig.d = number(j, "d_m");
    rig.h = number(j, "h_m");
    rig.theta = number(j, "pitch_deg") * kDegToRad;
    rig.gamma = number(j, "yaw_deg") * kDegToRad;
    rig.alpha = number(j, "aperture_deg") * kDegToRad;
    rig.rows = integer(j, "rows");
    rig.cols = integer(j, "cols");
    try
    {
        validate_rig(rig);
    }
    catch (const Error &e)
    {
        bad(std::string("camera: ") + e.what());
    }
    return rig;
}

CameraRig parse_camera(std::string_view json_text)
{
    try
    {
        return camera_from_json(json::parse(json_text));
    }
    catch (const json::exception &e)
    {
        bad(std::string("camera file: ") + e.what());
    }
}

std::string camera_to_json(const CameraRig &rig)
{
    return dump(to_json(rig));
}

// ---- manifests --------------------------------------------------------------

IngestManifest parse_manifest(std::string_view json_text, const fs::path &base_dir)
{
    json j;
    try
    {
        j = json::parse(json_text);
    }
    catch (const json::exception &e)
    {
        bad(std::string("manifest: ") + e.what());
    }

    IngestManifest m;
    m.bridge_id = text(j, "bridge_id");
    check_id(m.bridge_id, "bridge_id");
    m.phase = integer(j, "phase");
    if (m.phase != 1 && m.phase != 2)
        bad("phase must be 1 or 2");
    m.sensor = parse_sensor(text(j, "sensor"));
    const json &images = field(j, "images");
    if (!images.is_array())
        bad("'images' must be an array");
    for (const auto &entry : images)
    {
        ManifestEntry e;
        const fs::path file = text(entry, "file");
        e.file = file.is_absolute() ? file : base_dir / file;
        e.tag = geotag_from_json(field(entry, "geotag"));
        e.camera = camera_from_json(field(entry, "camera"));
        e.note = optional_text(entry, "note");
        if (const auto type = optional_text(entry, "defect_type"))
            e.defect_type = parse_defect_type(*type);
        if (const auto it = entry.find("transform"); it != entry.end() && !it->is_null())
            e.transform = Similarity2D{number(*it, "scale"), number(*it, "rotation_deg") * kDegToRad,
                                       number(*it, "tx"), number(*it, "ty")};
        m.images.push_back(std::move(e));
    }
    return m;
}

IngestManifest load_manifest(const fs::path &path)
{
    const Bytes bytes = read_file(path.string());
    return parse_manifest(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()),
                          path.parent_path());
}

std::string manifest_to_json(const IngestManifest &manifest)
{
    json images = json::array();
    for (const auto &e : manifest.images)
    {
        json entry = {{"file", e.file.generic_string()}, {"geotag", to_json(e.tag)}, {"camera", to_json(e.camera)}};
        if (e.note)
            entry["note"] = *e.note;
        if (e.defect_type)
            entry["defect_type"] = to_string(*e.defect_type);
        if (e.transform)
            entry["transform"] = {{"scale", e.transform->scale},
                                  {"rotation_deg", e.transform->rotation / kDegToRad},
                                  {"tx", e.transform->tx},
                                  {"ty", e.transform->ty}};
        images.push_back(std::move(entry));
    }
    return dump({{"bridge_id", manifest.bridge_id},
                 {"phase", manifest.phase},
                 {"sensor", to_string(manifest.sensor)},
                 {"images", std::move(images)}});
}

// ---- map geo-referencing ----------------------------------------------------

GeoPoint map_pixel_to_geo(const SurfaceMapMeta &meta, double row, double col)
{
    if (!(row >= 0.0 && row < meta.rows && col >= 0.0 && col < meta.cols))
        throw Error(ErrorCode::OutOfRange, "pixel outside the mosaic");
    return to_geo({(col - meta.anchor_col) * meta.gsd_m, (meta.anchor_row - row) * meta.gsd_m}, meta.anchor);
}

MapPixel geo_to_map_pixel(const SurfaceMapMeta &meta, const GeoPoint &p)
{
    const LocalPoint local = to_local(p, meta.anchor);
    const MapPixel px{meta.anchor_row - local.north / meta.gsd_m, meta.anchor_col + local.east / meta.gsd_m};
    // The ground extent reaches half a pixel past the outer pixel centers.
    if (!(px.row >= -0.5 && px.row <= meta.rows - 0.5 && px.col >= -0.5 && px.col <= meta.cols - 0.5))
        throw Error(ErrorCode::OutOfRange, "point outside the mosaic's ground extent");
    return px;
}

// ---- store ------------------------------------------------------------------

Store Store::open(const fs::path &root)
{
    std::error_code ec;
    fs::create_directories(root, ec);
    if (!fs::is_directory(root))
        throw Error(ErrorCode::IoFailure, "store root " + root.string() + " is not a directory");

    Store store(root);
    const auto load = [&](const fs::path &path, auto &&each) {
        if (!fs::exists(path))
            return;
        const json j = read_index(path);
        if (!j.is_array())
            throw Error(ErrorCode::CorruptStore, path.string() + " must hold an array");
        for (const auto &item : j)
        {
            try
            {
                each(item);
            }
            catch (const Error &e)
            {
                throw Error(ErrorCode::CorruptStore, path.string() + ": " + e.what());
            }
        }
    };

    load(root / "bridges.json", [&](const json &item) {
        BridgeRecord b = bridge_from_json(item);
        const std::string id = b.bridge_id;
        if (!store.bridges_.emplace(id, std::move(b)).second)
            throw Error(ErrorCode::CorruptStore, "duplicate bridge " + id);
    });
    load(root / "defects.json", [&](const json &item) {
        DefectRecord d = defect_from_json(item);
        const std::string id = d.defect_id;
        if (!store.defects_.emplace(id, std::move(d)).second)
            throw Error(ErrorCode::CorruptStore, "duplicate defect " + id);
    });

    if (fs::is_directory(root / "maps"))
    {
        for (const auto &dir : fs::directory_iterator(root / "maps"))
        {
            const fs::path meta_path = dir.path() / "meta.json";
            if (!dir.is_directory() || !fs::exists(meta_path))
                continue;
            SurfaceMapMeta meta;
            try
            {
                meta = map_meta_from_json(read_index(meta_path));
            }
            catch (const Error &e)
            {
                throw Error(ErrorCode::CorruptStore, meta_path.string() + ": " + e.what());
            }
            if (meta.map_id != dir.path().filename().string())
                throw Error(ErrorCode::CorruptStore, meta_path.string() + " names a different map");
            store.maps_.emplace(meta.map_id, meta);
        }
    }

    for (const auto &[id, bridge] : store.bridges_)
    {
        for (const auto &map_id : bridge.surface_map_ids)
        {
            const SurfaceMapMeta *meta = lookup(store.maps_, map_id);
            if (!meta || meta->bridge_id != id)
                throw Error(ErrorCode::CorruptStore, "bridge " + id + " lists unknown map " + map_id);
        }
    }
    for (const auto &[id, meta] : store.maps_)
        if (!lookup(store.bridges_, meta.bridge_id))
            throw Error(ErrorCode::CorruptStore, "map " + id + " belongs to unknown bridge " + meta.bridge_id);
    return store;
}

void Store::persist()
{
    for (const auto &[id, mosaic] : pending_mosaics_)
    {
        const fs::path dir = root_ / "maps" / id;
        write_file_atomic((dir / "mosaic.ppm").string(), save_pnm(mosaic));
        write_file_atomic((dir / "mask.pgm").string(), save_mask(mosaic));
    }
    for (const auto &[id, image] : pending_images_)
        write_file_atomic((root_ / "defect_images" / (id + ".ppm")).string(), save_pnm(image));
    for (const auto &[id, meta] : maps_)
        write_text(root_ / "maps" / id / "meta.json", dump(to_json(meta)));

    json defects = json::array();
    for (const auto &[id, d] : defects_)
        defects.push_back(to_json(d));
    write_text(root_ / "defects.json", dump(defects));

    json bridges = json::array();
    for (const auto &[id, b] : bridges_)
        bridges.push_back(to_json(b));
    write_text(root_ / "bridges.json", dump(bridges));

    pending_mosaics_.clear();
    pending_images_.clear();
}

std::vector<BridgeRecord> Store::bridges() const
{
    return values(bridges_);
}

std::vector<DefectRecord> Store::defects() const
{
    return values(defects_);
}

std::vector<SurfaceMapMeta> Store::maps() const
{
    return values(maps_);
}

const BridgeRecord *Store::find_bridge(std::string_view id) const
{
    return lookup(bridges_, id);
}

const SurfaceMapMeta *Store::find_map(std::string_view id) const
{
    return lookup(maps_, id);
}

const DefectRecord *Store::find_defect(std::string_view id) const
{
    return lookup(defects_, id);
}

std::vector<BridgeRecord> Store::query_bridges(const GeoBBox &box) const
{
    validate_bbox(box);
    std::vector<BridgeRecord> out;
    for (const auto &[id, b] : bridges_)
        if (bbox_contains(box, b.location))
            out.push_back(b);
    return out;
}

std::vector<DefectRecord> Store::query_defects(const GeoBBox &box) const
{
    validate_bbox(box);
    std::vector<DefectRecord> out;
    for (const auto &[id, d] : defects_)
        if (bbox_contains(box, d.position))
            out.push_back(d);
    return out;
}

void Store::put_bridge(BridgeRecord record)
{
    check_id(record.bridge_id, "bridge_id");
    geo(record.location.lat, record.location.lon);
    std::set<std::string> seen;
    for (const auto &map_id : record.surface_map_ids)
    {
        const SurfaceMapMeta *meta = find_map(map_id);
        if (!meta || meta->bridge_id != record.bridge_id || !seen.insert(map_id).second)
            throw Error(ErrorCode::PreconditionViolation, "bridge lists map " + map_id + " it does not own");
    }
    const std::string id = record.bridge_id;
    bridges_.insert_or_assign(id, std::move(record));
}

void Store::add_defect(DefectRecord record, std::optional<Raster> image)
{
    check_id(record.defect_id, "defect_id");
    check_id(record.bridge_id, "bridge_id");
    geo(record.position.lat, record.position.lon);
    if (!std::isfinite(record.position.lat) || !std::isfinite(record.position.lon))
        bad("defect position must be finite");
    if (defects_.count(record.defect_id))
        throw Error(ErrorCode::DuplicateId, "defect " + record.defect_id + " exists");
    if (image)
    {
        if (!record.image_id)
            record.image_id = record.defect_id;
        check_id(*record.image_id, "image_id");
        pending_images_.insert_or_assign(*record.image_id, std::move(*image));
    }
    const std::string id = record.defect_id;
    defects_.emplace(id, std::move(record));
}

void Store::add_map(SurfaceMapMeta meta, Raster mosaic)
{
    check_id(meta.map_id, "map_id");
    if (maps_.count(meta.map_id))
        throw Error(ErrorCode::DuplicateId, "map " + meta.map_id + " exists");
    const auto bridge = bridges_.find(meta.bridge_id);
    if (bridge == bridges_.end())
        throw Error(ErrorCode::NotFound, "bridge " + meta.bridge_id);
    if (mosaic.height() != meta.rows || mosaic.width() != meta.cols)
        throw Error(ErrorCode::DimensionMismatch, "mosaic size disagrees with its metadata");
    map_meta_from_json(to_json(meta)); // range checks
    bridge->second.surface_map_ids.push_back(meta.map_id);
    pending_mosaics_.insert_or_assign(meta.map_id, std::move(mosaic));
    const std::string id = meta.map_id;
    maps_.emplace(id, std::move(meta));
}

Raster Store::map_image(std::string_view map_id) const
{
    if (!find_map(map_id))
        throw Error(ErrorCode::NotFound, "map " + std::string(map_id));
    if (const Raster *pending = lookup(pending_mosaics_, map_id))
        return *pending;
    const fs::path dir = root_ / "maps" / std::string(map_id);
    return load_raster_with_mask(dir / "mosaic.ppm", dir / "mask.pgm");
}

std::optional<Raster> Store::defect_image(std::string_view defect_id) const
{
    const DefectRecord *d = find_defect(defect_id);
    if (!d)
        throw Error(ErrorCode::NotFound, "defect " + std::string(defect_id));
    if (!d->image_id)
        return std::nullopt;
    if (const Raster *pending = lookup(pending_images_, *d->image_id))
        return *pending;
    const fs::path path = root_ / "defect_images" / (*d->image_id + ".ppm");
    if (!fs::exists(path))
        return std::nullopt;
    return load_pnm(read_file(path.string()));
}

std::string Store::next_defect_id(std::string_view bridge_id) const
{
    const std::string prefix = std::string(bridge_id) + "-d";
    int highest = 0;
    for (const auto &[id, d] : defects_)
    {
        if (id.size() <= prefix.size() || id.compare(0, prefix.size(), prefix) != 0)
            continue;
        const std::string digits = id.substr(prefix.size());
        if (digits.size() > 9 || !std::all_of(digits.begin(), digits.end(), ::isdigit))
            continue;
        highest = std::max(highest, std::stoi(digits));
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", highest + 1);
    return prefix + buf;
}

bool Store::operator==(const Store &other) const
{
    if (bridges_ != other.bridges_ || maps_ != other.maps_ || defects_ != other.defects_)
        return false;
    for (const auto &[id, meta] : maps_)
        if (map_image(id) != other.map_image(id))
            return false;
    for (const auto &[id, d] : defects_)
        if (defect_image(id) != other.defect_image(id))
            return false;
    return true;
}

// ---- ingest -----------------------------------------------------------------

IngestReport ingest_batch(Store &store, const IngestManifest &manifest, IngestMode mode, const std::string &map_id,
                          int tau)
{
    if (manifest.images.empty())
        throw Error(ErrorCode::EmptyInput, "manifest lists no images");
    if (mode == IngestMode::StitchToMap)
    {
        check_id(map_id, "map_id");
        if (store.find_map(map_id))
            throw Error(ErrorCode::DuplicateId, "map " + map_id + " exists");
    }

    std::vector<Raster> images;
    images.reserve(manifest.images.size());
    for (const auto &entry : manifest.images)
    {
        if (!fs::exists(entry.file))
            throw Error(ErrorCode::MissingFile, entry.file.string());
        images.push_back(load_pnm(read_file(entry.file.string())));
    }

    Store staged = store;
    IngestReport report;
    if (!staged.find_bridge(manifest.bridge_id))
        staged.put_bridge({manifest.bridge_id, manifest.bridge_id, manifest.images.front().tag.position(),
                           Condition::Good, {}});

    if (mode == IngestMode::StitchToMap)
    {
        std::vector<GeoTaggedView> views;
        views.reserve(images.size());
        for (std::size_t i = 0; i < images.size(); ++i)
            views.push_back({std::move(images[i]), manifest.images[i].camera, manifest.images[i].tag,
                             i > 0 ? manifest.images[i].transform : std::nullopt});
        StitchResult stitched = stitch_views(views, tau);

        SurfaceMapMeta meta;
        meta.map_id = map_id;
        meta.bridge_id = manifest.bridge_id;
        meta.phase = manifest.phase;
        meta.sensor = manifest.sensor;
        meta.anchor = stitched.map.anchor;
        meta.anchor_row = stitched.map.anchor_row;
        meta.anchor_col = stitched.map.anchor_col;
        meta.gsd_m = stitched.map.gsd;
        meta.rows = stitched.map.mosaic.height();
        meta.cols = stitched.map.mosaic.width();
        staged.add_map(meta, std::move(stitched.map.mosaic));
        report.created_ids.push_back(map_id);
        for (const auto &step : stitched.steps)
        {
            report.methods.push_back(step.method);
            report.inlier_counts.push_back(step.inlier_count);
        }
    }
    else
    {
        for (std::size_t i = 0; i < images.size(); ++i)
        {
            const ManifestEntry &entry = manifest.images[i];
            DefectRecord record;
            record.defect_id = staged.next_defect_id(manifest.bridge_id);
            record.bridge_id = manifest.bridge_id;
            record.position = entry.tag.position();
            record.defect_type = entry.defect_type.value_or(DefectType::Other);
            record.sensor = manifest.sensor;
            record.note = entry.note.value_or("");
            report.created_ids.push_back(record.defect_id);
            staged.add_defect(std::move(record), std::move(images[i]));
            report.methods.push_back("Record");
            report.inlier_counts.push_back(0);
        }
    }

    staged.persist();
    store = std::move(staged);
    return report;
}

} // namespace deckfuse
