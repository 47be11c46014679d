#include "gateway_harness.hpp"
#include "test_util.hpp"

#include <deckfuse/dataset.hpp>
#include <deckfuse/error.hpp>

#include <doctest.h>
#include <json.hpp>

#include <fstream>

using namespace deckfuse;
using deckfuse::testing::LiveGateway;
using deckfuse::testing::TempDir;
using nlohmann::json;

namespace
{

json body_of(const httplib::Result &res)
{
    REQUIRE(res);
    return json::parse(res->body);
}

void check_error(const httplib::Result &res, int status, const std::string &code)
{
    REQUIRE(res);
    CHECK(res->status == status);
    const json j = json::parse(res->body);
    CHECK(j.at("status") == status);
    CHECK(j.at("code") == code);
    CHECK(j.at("message").is_string());
}

Store seeded(const TempDir &dir)
{
    Store store = Store::open(dir.path());
    seed_demo_store(store);
    return store;
}

std::string poor_bridge(const Store &store)
{
    for (const auto &b : store.bridges())
        if (b.condition == Condition::Poor)
            return b.bridge_id;
    FAIL("fixture has no Poor bridge");
    return {};
}

} // namespace

TEST_SUITE("gateway")
{
    TEST_CASE("base64")
    {
        const Bytes raw{0, 1, 2, 250, 251, 252, 253};
        for (std::size_t n = 0; n <= raw.size(); ++n)
        {
            const Bytes part(raw.begin(), raw.begin() + static_cast<long>(n));
            CHECK(base64_decode(base64_encode(part)) == part);
        }
        CHECK(base64_encode(Bytes{'M', 'a', 'n'}) == "TWFu");
        CHECK(base64_encode(Bytes{'M'}) == "TQ==");
        CHECK(base64_decode("TW\nFu") == Bytes{'M', 'a', 'n'});
        CHECK_THROWS_AS(base64_decode("T*Fu"), Error);
    }

    TEST_CASE("bridges and maps")
    {
        TempDir dir("gateway-read");
        Store store = seeded(dir);
        const std::string poor = poor_bridge(store);
        LiveGateway live(store);
        auto &cli = live.client();

        const json bridges = body_of(cli.Get("/api/bridges"));
        REQUIRE(bridges.size() == 5);
        for (const auto &b : bridges)
        {
            CHECK(b.at("condition").is_string());
            CHECK(b.at("flag_color") == (b.at("condition") == "Poor" ? "red" : b.at("condition") == "Fair" ? "yellow" : "green"));
        }

        const json one = body_of(cli.Get("/api/bridges/" + poor));
        CHECK(one.at("bridge_id") == poor);
        REQUIRE(one.at("surface_maps").size() == 3);
        for (const auto &m : one.at("surface_maps"))
        {
            const json meta = body_of(cli.Get("/api/maps/" + m.at("map_id").get<std::string>()));
            CHECK(meta == m);
            const auto img = cli.Get("/api/maps/" + m.at("map_id").get<std::string>() + "/image");
            REQUIRE(img);
            CHECK(img->status == 200);
            CHECK(img->get_header_value("Content-Type") == "image/bmp");
            CHECK(img->body.substr(0, 2) == "BM");
        }

        check_error(cli.Get("/api/bridges/nope"), 404, "bridge_not_found");
        check_error(cli.Get("/api/maps/nope"), 404, "map_not_found");
        check_error(cli.Get("/api/maps/nope/image"), 404, "map_not_found");
        check_error(cli.Get("/api/nothing"), 404, "not_found");
    }

    TEST_CASE("bbox parameters")
    {
        TempDir dir("gateway-bbox");
        Store store = seeded(dir);
        LiveGateway live(store);
        auto &cli = live.client();

        const BridgeRecord b = store.bridges().front();
        const std::string lat = std::to_string(b.location.lat), lon = std::to_string(b.location.lon);
        const json tight = body_of(cli.Get("/api/bridges?min_lat=" + std::to_string(b.location.lat - 1e-4) +
                                           "&min_lon=" + std::to_string(b.location.lon - 1e-4) + "&max_lat=" +
                                           std::to_string(b.location.lat + 1e-4) + "&max_lon=" +
                                           std::to_string(b.location.lon + 1e-4)));
        REQUIRE(tight.size() == 1);
        CHECK(tight[0].at("bridge_id") == b.bridge_id);

        check_error(cli.Get("/api/bridges?min_lat=40"), 400, "bad_request");
        check_error(cli.Get("/api/defects?min_lat=x&min_lon=0&max_lat=1&max_lon=1"), 400, "bad_request");
        check_error(cli.Get("/api/defects?min_lat=2&min_lon=0&max_lat=1&max_lon=1"), 400, "bad_request");
    }

    TEST_CASE("defects and read-your-write")
    {
        TempDir dir("gateway-write");
        Store store = seeded(dir);
        const std::string poor = poor_bridge(store);
        LiveGateway live(store);
        auto &cli = live.client();

        const json all = body_of(cli.Get("/api/defects"));
        CHECK(all.size() == store.defects().size());
        bool saw_image = false, saw_plain = false;
        for (const auto &d : all)
        {
            const std::string id = d.at("defect_id");
            CHECK(body_of(cli.Get("/api/defects/" + id)) == d);
            const auto img = cli.Get("/api/defects/" + id + "/image");
            REQUIRE(img);
            if (d.contains("image_id") && !d.at("image_id").is_null())
            {
                CHECK(img->status == 200);
                saw_image = true;
            }
            else
            {
                check_error(img, 404, "no_image");
                saw_plain = true;
            }
        }
        CHECK(saw_image);
        CHECK(saw_plain);
        check_error(cli.Get("/api/defects/nope"), 404, "defect_not_found");

        Raster closeup(6, 4, 3, 90);
        const Bytes pnm = save_pnm(closeup);
        const json post{{"defect_id", "posted-1"},
                        {"bridge_id", poor},
                        {"lat", 40.85},
                        {"lon", -96.78},
                        {"defect_type", "spall"},
                        {"sensor", "optical"},
                        {"note", "posted over HTTP"},
                        {"image", base64_encode(pnm)}};
        const auto created = cli.Post("/api/defects", post.dump(), "application/json");
        REQUIRE(created);
        CHECK(created->status == 201);
        const json stored = json::parse(created->body);
        CHECK(stored.at("defect_id") == "posted-1");

        const json found = body_of(cli.Get("/api/defects?min_lat=40.84&min_lon=-96.79&max_lat=40.86&max_lon=-96.77"));
        bool listed = false;
        for (const auto &d : found)
            listed = listed || d.at("defect_id") == "posted-1";
        CHECK(listed);
        const auto img = cli.Get("/api/defects/posted-1/image");
        REQUIRE(img);
        CHECK(img->status == 200);
        CHECK(img->body == [&] {
            const Bytes bmp = encode_bmp(closeup);
            return std::string(bmp.begin(), bmp.end());
        }());

        check_error(cli.Post("/api/defects", post.dump(), "application/json"), 409, "duplicate_defect");

        json auto_id = post;
        auto_id.erase("defect_id");
        auto_id.erase("image");
        const json assigned = body_of(cli.Post("/api/defects", auto_id.dump(), "application/json"));
        CHECK(assigned.at("defect_id").get<std::string>().rfind(poor + "-d", 0) == 0);

        json orphan = post;
        orphan["defect_id"] = "orphan";
        orphan["bridge_id"] = "no-such-bridge";
        check_error(cli.Post("/api/defects", orphan.dump(), "application/json"), 404, "bridge_not_found");
        check_error(cli.Post("/api/defects", "{not json", "application/json"), 400, "bad_request");
        json bad_image = post;
        bad_image["defect_id"] = "bad-image";
        bad_image["image"] = base64_encode(Bytes{'P', '9'});
        check_error(cli.Post("/api/defects", bad_image.dump(), "application/json"), 400, "bad_request");

        // The write reached disk.
        const Store reopened = Store::open(dir.path());
        CHECK(reopened.find_defect("posted-1"));
        CHECK(reopened.defect_image("posted-1") == std::optional<Raster>(closeup));
    }

    TEST_CASE("static files and fallback page")
    {
        TempDir dir("gateway-static");
        Store store = Store::open(dir / "store");
        {
            LiveGateway live(store);
            const auto res = live.client().Get("/");
            REQUIRE(res);
            CHECK(res->status == 200);
            CHECK(res->body.find("/api/bridges") != std::string::npos);
            CHECK(body_of(live.client().Get("/api/bridges")) == json::array());
        }
        std::filesystem::create_directories(dir / "web");
        std::ofstream(dir / "web" / "index.html") << "<p>client</p>";
        LiveGateway live(store, dir / "web");
        const auto res = live.client().Get("/");
        REQUIRE(res);
        CHECK(res->body == "<p>client</p>");
    }

    TEST_CASE("port in use")
    {
        TempDir dir("gateway-port");
        LiveGateway live(Store::open(dir.path()));
        Gateway second(Store::open(dir.path()));
        CHECK_THROWS_AS(second.bind("127.0.0.1", live.port()), Error);
    }
}
