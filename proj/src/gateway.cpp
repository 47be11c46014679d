#include <deckfuse/error.hpp>
#include <deckfuse/gateway.hpp>
#include <deckfuse/records_json.hpp>

#include <httplib.h>

#include <array>
#include <charconv>
#include <mutex>
#include <shared_mutex>

namespace deckfuse
{

using nlohmann::json;

namespace
{

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr const char *kFallbackPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>deckfuse</title></head>
<body>
<h1>deckfuse</h1>
<p>The map client is not installed. The API is live:</p>
<ul>
<li><a href="/api/bridges">/api/bridges</a></li>
<li><a href="/api/defects">/api/defects</a></li>
</ul>
</body></html>
)";

void send_error(httplib::Response &res, int status, std::string_view code, const std::string &message)
{
    res.status = status;
    res.set_content(json{{"status", status}, {"code", code}, {"message", message}}.dump(), "application/json");
}

void send_json(httplib::Response &res, const json &body, int status = 200)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_bmp(httplib::Response &res, const Raster &r)
{
    const Bytes bmp = encode_bmp(r);
    res.set_content(std::string(bmp.begin(), bmp.end()), "image/bmp");
}

double parse_param(const httplib::Request &req, const char *key)
{
    const std::string s = req.get_param_value(key);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw Error(ErrorCode::PreconditionViolation, std::string("query parameter ") + key + " is not a number");
    return v;
}

// All four bounds or none.
std::optional<GeoBBox> parse_bbox(const httplib::Request &req)
{
    constexpr std::array<const char *, 4> keys{"min_lat", "min_lon", "max_lat", "max_lon"};
    int present = 0;
    for (const char *k : keys)
        present += req.has_param(k) ? 1 : 0;
    if (present == 0)
        return std::nullopt;
    if (present != 4)
        throw Error(ErrorCode::PreconditionViolation, "bbox needs min_lat, min_lon, max_lat and max_lon");
    GeoBBox box{parse_param(req, keys[0]), parse_param(req, keys[1]), parse_param(req, keys[2]),
                parse_param(req, keys[3])};
    validate_bbox(box);
    return box;
}

json bridge_json(const BridgeRecord &b)
{
    json j = to_json(b);
    j["flag_color"] = flag_color(b.condition);
    return j;
}

} // namespace

Bytes base64_decode(std::string_view text)
{
    Bytes out;
    out.reserve(text.size() * 3 / 4);
    std::uint32_t buffer = 0;
    int bits = 0;
    bool padding = false;
    for (char c : text)
    {
        if (c == ' ' || c == '\n' || c == '\r' || c == '\t')
            continue;
        if (c == '=')
        {
            padding = true;
            continue;
        }
        const auto pos = kAlphabet.find(c);
        if (pos == std::string_view::npos || padding)
            throw Error(ErrorCode::PreconditionViolation, "invalid base64 input");
        buffer = (buffer << 6) | static_cast<std::uint32_t>(pos);
        bits += 6;
        if (bits >= 8)
        {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((buffer >> bits) & 0xFF));
        }
    }
    return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3)
    {
        const std::size_t n = std::min<std::size_t>(3, bytes.size() - i);
        std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
        if (n > 1)
            chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
        if (n > 2)
            chunk |= bytes[i + 2];
        for (std::size_t k = 0; k < 4; ++k)
            out.push_back(k <= n ? kAlphabet[(chunk >> (18 - 6 * k)) & 0x3F] : '=');
    }
    return out;
}

struct Gateway::Impl
{
    Store store;
    std::shared_mutex lock;
    httplib::Server server;

    explicit Impl(Store s) : store(std::move(s)) {}

    // Runs `body`, mapping library errors onto the documented shapes.
    template <typename Body>
    void guarded(httplib::Response &res, Body &&body)
    {
        try
        {
            body();
        }
        catch (const Error &e)
        {
            switch (e.code())
            {
            case ErrorCode::PreconditionViolation:
            case ErrorCode::OutOfRange:
            case ErrorCode::InvalidManifest:
            case ErrorCode::MalformedHeader:
            case ErrorCode::TruncatedPayload:
            case ErrorCode::UnsupportedMaxval:
            case ErrorCode::DimensionMismatch:
                send_error(res, 400, "bad_request", e.what());
                break;
            default:
                send_error(res, 500, "internal", e.what());
            }
        }
        catch (const json::exception &e)
        {
            send_error(res, 400, "bad_request", e.what());
        }
    }

    void routes()
    {
        server.Get("/api/bridges", [this](const httplib::Request &req, httplib::Response &res) {
            guarded(res, [&] {
                const auto box = parse_bbox(req);
                std::shared_lock guard(lock);
                json out = json::array();
                for (const auto &b : box ? store.query_bridges(*box) : store.bridges())
                    out.push_back(bridge_json(b));
                send_json(res, out);
            });
        });

        server.Get(R"(/api/bridges/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
            guarded(res, [&] {
                std::shared_lock guard(lock);
                const BridgeRecord *b = store.find_bridge(req.matches[1].str());
                if (!b)
                    return send_error(res, 404, "bridge_not_found", "no bridge " + req.matches[1].str());
                json out = bridge_json(*b);
                json maps = json::array();
                for (const auto &id : b->surface_map_ids)
                    maps.push_back(to_json(*store.find_map(id)));
                out["surface_maps"] = std::move(maps);
                send_json(res, out);
            });
        });

        server.Get(R"(/api/maps/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
            guarded(res, [&] {
                std::shared_lock guard(lock);
                const SurfaceMapMeta *m = store.find_map(req.matches[1].str());
                if (!m)
                    return send_error(res, 404, "map_not_found", "no map " + req.matches[1].str());
                send_json(res, to_json(*m));
            });
        });

        server.Get(R"(/api/maps/([^/]+)/image)", [this](const httplib::Request &req, httplib::Response &res) {
            guarded(res, [&] {
                std::shared_lock guard(lock);
                if (!store.find_map(req.matches[1].str()))
                    return send_error(res, 404, "map_not_found", "no map " + req.matches[1].str());
                send_bmp(res, store.map_image(req.matches[1].str()));
            });
        });

        server.Get("/api/defects", [this](const httplib::Request &req, httplib::Response &res) {
            guarded(res, [&] {
                const auto box = parse_bbox(req);
                std::shared_lock guard(lock);
                json out = json::array();
                for (const auto &d : box ? store.query_defects(*box) : store.defects())
                    out.push_back(to_json(d));
                send_json(res, out);
            });
        });

        server.Get(R"(/api/defects/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
            guarded(res, [&] {
                std::shared_lock guard(lock);
                const DefectRecord *d = store.find_defect(req.matches[1].str());
                if (!d)
                    return send_error(res, 404, "defect_not_found", "no defect " + req.matches[1].str());
                send_json(res, to_json(*d));
            });
        });

        server.Get(R"(/api/defects/([^/]+)/image)", [this](const httplib::Request &req, httplib::Response &res) {
            guarded(res, [&] {
                std::shared_lock guard(lock);
                const std::string id = req.matches[1].str();
                if (!store.find_defect(id))
                    return send_error(res, 404, "defect_not_found", "no defect " + id);
                const auto image = store.defect_image(id);
                if (!image)
                    return send_error(res, 404, "no_image", "defect " + id + " has no image");
                send_bmp(res, *image);
            });
        });

        server.Post("/api/defects", [this](const httplib::Request &req, httplib::Response &res) {
            guarded(res, [&] { post_defect(req, res); });
        });
    }

    void post_defect(const httplib::Request &req, httplib::Response &res)
    {
        json body = json::parse(req.body);
        if (!body.is_object())
            return send_error(res, 400, "bad_request", "body must be a JSON object");
        std::optional<Raster> image;
        if (const auto it = body.find("image"); it != body.end() && !it->is_null())
        {
            if (!it->is_string())
                return send_error(res, 400, "bad_request", "'image' must be a base64 string");
            image = load_pnm(base64_decode(it->get<std::string>()));
            body.erase("image");
        }

        std::unique_lock guard(lock);
        const bool auto_id = !body.contains("defect_id") || body["defect_id"].is_null();
        if (auto_id && body.contains("bridge_id") && body["bridge_id"].is_string())
            body["defect_id"] = store.next_defect_id(body["bridge_id"].get<std::string>());
        DefectRecord record = defect_from_json(body);
        if (!store.find_bridge(record.bridge_id))
            return send_error(res, 404, "bridge_not_found", "no bridge " + record.bridge_id);
        if (store.find_defect(record.defect_id))
            return send_error(res, 409, "duplicate_defect", "defect " + record.defect_id + " exists");
        if (!image)
            record.image_id.reset();

        Store staged = store;
        staged.add_defect(record, std::move(image));
        staged.persist();
        store = std::move(staged);
        send_json(res, to_json(*store.find_defect(record.defect_id)), 201);
    }
};

Gateway::Gateway(Store store, std::filesystem::path static_dir) : impl_(std::make_unique<Impl>(std::move(store)))
{
    impl_->routes();
    // httplib's default also sets SO_REUSEPORT, which would let a second
    // server share the port silently.
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char *>(&yes), sizeof(yes));
    });
    if (!static_dir.empty() && std::filesystem::is_directory(static_dir))
    {
        impl_->server.set_mount_point("/", static_dir.string());
    }
    else
    {
        impl_->server.Get("/", [](const httplib::Request &, httplib::Response &res) {
            res.set_content(kFallbackPage, "text/html");
        });
    }

    // Unmatched routes and anything else without a body get the error shape.
    impl_->server.set_error_handler([](const httplib::Request &req, httplib::Response &res) {
        if (!res.body.empty())
            return httplib::Server::HandlerResponse::Unhandled;
        send_error(res, res.status, res.status == 404 ? "not_found" : "error", "cannot serve " + req.path);
        return httplib::Server::HandlerResponse::Handled;
    });
    impl_->server.set_exception_handler([](const httplib::Request &, httplib::Response &res, std::exception_ptr ep) {
        std::string message = "unexpected failure";
        try
        {
            std::rethrow_exception(ep);
        }
        catch (const std::exception &e)
        {
            message = e.what();
        }
        catch (...)
        {
        }
        send_error(res, 500, "internal", message);
    });
}

Gateway::~Gateway()
{
    stop();
}

int Gateway::bind(const std::string &host, int port)
{
    if (port == 0)
    {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0)
            throw Error(ErrorCode::PortInUse, "no free port on " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port))
        throw Error(ErrorCode::PortInUse, host + ":" + std::to_string(port));
    return port;
}

void Gateway::run()
{
    impl_->server.listen_after_bind();
}

void Gateway::stop()
{
    if (impl_ && impl_->server.is_running())
        impl_->server.stop();
}

void Gateway::wait_until_ready() const
{
    impl_->server.wait_until_ready();
}

} // namespace deckfuse
