#pragma once

// Wire and on-disk JSON shapes of catalog records.

#include <deckfuse/catalog.hpp>

#include <json.hpp>

namespace deckfuse
{

nlohmann::json to_json(const BridgeRecord &b);
nlohmann::json to_json(const SurfaceMapMeta &m);
nlohmann::json to_json(const DefectRecord &d);
nlohmann::json to_json(const ImageGeoTag &t);
nlohmann::json to_json(const CameraRig &rig);

// Throw InvalidManifest on missing keys, wrong types or out-of-range values.
BridgeRecord bridge_from_json(const nlohmann::json &j);
SurfaceMapMeta map_meta_from_json(const nlohmann::json &j);
DefectRecord defect_from_json(const nlohmann::json &j);
ImageGeoTag geotag_from_json(const nlohmann::json &j);
CameraRig camera_from_json(const nlohmann::json &j);

} // namespace deckfuse
