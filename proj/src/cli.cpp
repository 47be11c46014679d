#include <deckfuse/cli.hpp>
#include <deckfuse/dataset.hpp>
#include <deckfuse/error.hpp>
#include <deckfuse/gateway.hpp>
#include <deckfuse/records_json.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <ostream>
#include <sstream>
#include <thread>

namespace deckfuse
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int)
{
    g_interrupted = true;
}

std::string read_text(const fs::path &path)
{
    const Bytes bytes = read_file(path.string());
    return std::string(bytes.begin(), bytes.end());
}

GeoBBox parse_bbox_arg(const std::string &s)
{
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        std::size_t used = 0;
        double x = 0.0;
        try
        {
            x = std::stod(item, &used);
        }
        catch (const std::exception &)
        {
            used = 0;
        }
        if (used == 0 || used != item.size())
            throw CLI::ValidationError("--bbox", "expected min_lat,min_lon,max_lat,max_lon");
        v.push_back(x);
    }
    if (v.size() != 4)
        throw CLI::ValidationError("--bbox", "expected min_lat,min_lon,max_lat,max_lon");
    return {v[0], v[1], v[2], v[3]};
}

Store open_existing(const std::string &root)
{
    if (!fs::is_directory(root))
        throw Error(ErrorCode::NotFound, "no store at " + root);
    return Store::open(root);
}

json report_json(const IngestReport &r)
{
    return {{"created", r.created_ids}, {"methods", r.methods}, {"inliers", r.inlier_counts}};
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Bridge-deck inspection data fusion: orthorectify, stitch, catalog and serve."};
    app.name("deckfuse");
    app.require_subcommand(1);

    // synth
    SynthOptions synth;
    std::string synth_out;
    bool featureless = false;
    auto *cmd_synth = app.add_subcommand("synth", "Generate a synthetic two-phase inspection dataset");
    cmd_synth->add_option("--out", synth_out, "Output directory")->required();
    cmd_synth->add_option("--views", synth.views, "Number of aerial views")->capture_default_str();
    cmd_synth->add_option("--pitch", synth.pitch_deg, "Camera depression, degrees")->capture_default_str();
    cmd_synth->add_option("--aperture", synth.aperture_deg, "Half field of view, degrees")->capture_default_str();
    cmd_synth->add_option("--height", synth.height_m, "Flight height, meters")->capture_default_str();
    cmd_synth->add_option("--overlap", synth.overlap, "Along-track overlap fraction")->capture_default_str();
    cmd_synth->add_option("--gps-noise", synth.gps_noise_m, "Geotag noise sigma, meters")->capture_default_str();
    cmd_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    cmd_synth->add_option("--size", synth.image_size, "Image rows and columns")->capture_default_str();
    cmd_synth->add_option("--defects", synth.defects, "Number of defects")->capture_default_str();
    cmd_synth->add_option("--width", synth.deck_width_m, "Deck width, meters")->capture_default_str();
    cmd_synth->add_option("--bridge-id", synth.bridge_id, "Bridge id written to the manifests")->capture_default_str();
    cmd_synth->add_flag("--featureless", featureless, "Flat gray deck (forces GPS placement)");

    // ipm
    std::string ipm_image, ipm_camera, ipm_out, ipm_mask;
    double ipm_gsd = 0.0;
    auto *cmd_ipm = app.add_subcommand("ipm", "Perspective-correct one image onto the ground plane");
    cmd_ipm->add_option("--image", ipm_image, "Source PNM")->required();
    cmd_ipm->add_option("--camera", ipm_camera, "Camera parameter JSON")->required();
    cmd_ipm->add_option("--gsd", ipm_gsd, "Output meters per pixel")->required();
    cmd_ipm->add_option("--out", ipm_out, "Output PNM")->required();
    cmd_ipm->add_option("--mask-out", ipm_mask, "Optional PGM validity mask");

    // stitch
    std::string store_path, manifest_path, map_id;
    int tau = kDefaultTau;
    auto *cmd_stitch = app.add_subcommand("stitch", "Build a surface map from a phase-1 manifest");
    cmd_stitch->add_option("--manifest", manifest_path, "Ingest manifest")->required();
    cmd_stitch->add_option("--store", store_path, "Store directory")->envname("DECKFUSE_STORE")->required();
    cmd_stitch->add_option("--map-id", map_id, "Id of the new map")->required();
    cmd_stitch->add_option("--tau", tau, "Minimum RANSAC inliers for feature placement")->capture_default_str();

    // ingest
    std::string mode = "defects";
    auto *cmd_ingest = app.add_subcommand("ingest", "Ingest a manifest into the store");
    cmd_ingest->add_option("--manifest", manifest_path, "Ingest manifest")->required();
    cmd_ingest->add_option("--store", store_path, "Store directory")->envname("DECKFUSE_STORE")->required();
    cmd_ingest->add_option("--mode", mode, "defects or map")
        ->check(CLI::IsMember({"defects", "map"}))
        ->capture_default_str();
    cmd_ingest->add_option("--map-id", map_id, "Map id (mode map)");
    cmd_ingest->add_option("--tau", tau, "Minimum RANSAC inliers (mode map)")->capture_default_str();

    // serve
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string static_dir;
    auto *cmd_serve = app.add_subcommand("serve", "Serve the HTTP API and web client");
    cmd_serve->add_option("--store", store_path, "Store directory")->envname("DECKFUSE_STORE")->required();
    cmd_serve->add_option("--port", port, "TCP port (0 picks one)")->capture_default_str();
    cmd_serve->add_option("--host", host, "Bind address")->capture_default_str();
    cmd_serve->add_option("--static", static_dir, "Web client build directory")->envname("DECKFUSE_WEBUI");

    // query
    std::string bbox_text;
    bool want_defects = false, want_bridges = false;
    auto *cmd_query = app.add_subcommand("query", "Print records inside a bounding box as JSON");
    cmd_query->add_option("--store", store_path, "Store directory")->envname("DECKFUSE_STORE")->required();
    cmd_query->add_option("--bbox", bbox_text, "min_lat,min_lon,max_lat,max_lon")->required();
    auto *flag_defects = cmd_query->add_flag("--defects", want_defects, "Defect records (default)");
    auto *flag_bridges = cmd_query->add_flag("--bridges", want_bridges, "Bridge records");
    flag_defects->excludes(flag_bridges);

    // seed-demo
    auto *cmd_seed = app.add_subcommand("seed-demo", "Populate a store with the five-bridge demo fixture");
    cmd_seed->add_option("--store", store_path, "Store directory")->envname("DECKFUSE_STORE")->required();

    std::vector<std::string> argv_storage{"deckfuse"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char *> argv;
    for (auto &a : argv_storage)
        argv.push_back(a.data());

    try
    {
        app.parse(static_cast<int>(argv.size()), argv.data());
    }
    catch (const CLI::CallForHelp &)
    {
        out << app.help();
        return 0;
    }
    catch (const CLI::ParseError &e)
    {
        err << "deckfuse: " << e.what() << "\n";
        if (const auto *sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
            err << sub->help();
        return 1;
    }

    try
    {
        if (cmd_synth->parsed())
        {
            synth.style = featureless ? SceneStyle::Featureless : SceneStyle::Textured;
            const SynthDataset data = make_synth_dataset(synth);
            write_synth_dataset(data, synth, synth_out);
            out << json{{"out", synth_out},
                        {"views", data.views.size()},
                        {"defects", data.defects.size()},
                        {"gsd_m", nominal_gsd(data.plan.rig_template)}}
                       .dump(2)
                << "\n";
        }
        else if (cmd_ipm->parsed())
        {
            const CameraRig rig = parse_camera(read_text(ipm_camera));
            const Raster src = load_pnm(read_file(ipm_image));
            if (!(ipm_gsd > 0.0))
                throw Error(ErrorCode::PreconditionViolation, "--gsd must be positive");
            const GroundBox box = footprint_box(rig, kMaxOrthoRangeHeights * rig.h);
            const OrthoGrid grid = grid_covering(box, {rig.l, rig.d}, ipm_gsd);
            const Raster ortho = render_orthophoto(rig, src, grid);
            write_file_atomic(ipm_out, save_pnm(ortho));
            if (!ipm_mask.empty())
                write_file_atomic(ipm_mask, save_mask(ortho));
            out << json{{"out", ipm_out}, {"rows", grid.rows}, {"cols", grid.cols}, {"gsd_m", grid.gsd}}.dump(2)
                << "\n";
        }
        else if (cmd_stitch->parsed() || (cmd_ingest->parsed() && mode == "map"))
        {
            if (map_id.empty())
                throw CLI::RequiredError("--map-id");
            Store store = Store::open(store_path);
            const IngestManifest manifest = load_manifest(manifest_path);
            const IngestReport report = ingest_batch(store, manifest, IngestMode::StitchToMap, map_id, tau);
            const SurfaceMapMeta &meta = *store.find_map(map_id);
            json j = report_json(report);
            j["map"] = to_json(meta);
            out << j.dump(2) << "\n";
        }
        else if (cmd_ingest->parsed())
        {
            Store store = Store::open(store_path);
            const IngestManifest manifest = load_manifest(manifest_path);
            out << report_json(ingest_batch(store, manifest, IngestMode::DefectRecords)).dump(2) << "\n";
        }
        else if (cmd_serve->parsed())
        {
            Gateway gateway(open_existing(store_path), static_dir);
            const int bound = gateway.bind(host, port);
            out << "listening on http://" << host << ":" << bound << std::endl;
            g_interrupted = false;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::thread server([&] { gateway.run(); });
            while (!g_interrupted)
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            gateway.stop();
            server.join();
        }
        else if (cmd_query->parsed())
        {
            const GeoBBox box = parse_bbox_arg(bbox_text);
            const Store store = open_existing(store_path);
            json j = json::array();
            if (want_bridges)
                for (const auto &b : store.query_bridges(box))
                    j.push_back(to_json(b));
            else
                for (const auto &d : store.query_defects(box))
                    j.push_back(to_json(d));
            out << j.dump(2) << "\n";
        }
        else if (cmd_seed->parsed())
        {
            Store store = Store::open(store_path);
            seed_demo_store(store);
            out << json{{"bridges", store.bridges().size()},
                        {"maps", store.maps().size()},
                        {"defects", store.defects().size()}}
                       .dump(2)
                << "\n";
        }
    }
    catch (const CLI::Error &e)
    {
        err << "deckfuse: " << e.what() << "\n";
        return 1;
    }
    catch (const Error &e)
    {
        err << "deckfuse: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception &e)
    {
        err << "deckfuse: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace deckfuse
