#include <deckfuse/error.hpp>
#include <deckfuse/stitcher.hpp>
#include <deckfuse/synth.hpp>

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace deckfuse;

namespace
{

constexpr double kCheckerOrigin = 6.3;
constexpr double kCheckerSquare = 12.0;

// 8x8 smooth checkerboard on a flat background; interior corners at
// kCheckerOrigin + k * kCheckerSquare for k = 1..7.
Raster checkerboard_image()
{
    const int size = 112;
    Raster img(size, size, 1, 128);
    const double end = kCheckerOrigin + 8 * kCheckerSquare;
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c)
        {
            if (c < kCheckerOrigin || c > end || r < kCheckerOrigin || r > end)
                continue;
            const double s = std::sin(std::numbers::pi * (c - kCheckerOrigin) / kCheckerSquare) *
                             std::sin(std::numbers::pi * (r - kCheckerOrigin) / kCheckerSquare);
            img.set(c, r, 0, static_cast<std::uint8_t>(std::lround(128 + 100 * std::tanh(3 * s))));
        }
    return img;
}

// Smoothed seeded noise, rich in distinct corners.
Raster texture(int width, int height, std::uint64_t seed)
{
    SynthRng rng(seed);
    std::vector<double> a(static_cast<std::size_t>(width) * height);
    for (auto &v : a)
        v = rng.uniform();
    std::vector<double> b(a.size());
    for (int pass = 0; pass < 2; ++pass)
    {
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c)
            {
                double sum = 0.0;
                int n = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                    {
                        const int rr = r + dr, cc = c + dc;
                        if (rr < 0 || cc < 0 || rr >= height || cc >= width)
                            continue;
                        sum += a[static_cast<std::size_t>(rr) * width + cc];
                        ++n;
                    }
                b[static_cast<std::size_t>(r) * width + c] = sum / n;
            }
        a.swap(b);
    }
    Raster img(width, height, 1);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
        {
            const double v = (a[static_cast<std::size_t>(r) * width + c] - 0.5) * 4.0 * 255 + 128;
            img.set(c, r, 0, static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
        }
    return img;
}

Raster crop(const Raster &src, int x, int y, int width, int height)
{
    Raster out(width, height, src.channels());
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int ch = 0; ch < src.channels(); ++ch)
                out.set(c, r, ch, src.at(c + x, r + y, ch));
    return out;
}

ImageGeoTag tag_at(double lat, double lon)
{
    ImageGeoTag t;
    t.lat = lat;
    t.lon = lon;
    return t;
}

const GeoPoint kAnchor{40.8, -96.7};

} // namespace

TEST_SUITE("features")
{
    TEST_CASE("uniform image has no keypoints")
    {
        CHECK(detect_features(Raster(64, 64, 1, 90), 500).empty());
    }

    TEST_CASE("checkerboard corners are found")
    {
        const auto keypoints = detect_features(checkerboard_image(), 500);
        int hits = 0;
        for (int i = 1; i <= 7; ++i)
            for (int j = 1; j <= 7; ++j)
            {
                const double x = kCheckerOrigin + i * kCheckerSquare;
                const double y = kCheckerOrigin + j * kCheckerSquare;
                for (const auto &k : keypoints)
                    if (std::hypot(k.x - x, k.y - y) < 1.0)
                    {
                        ++hits;
                        break;
                    }
            }
        CHECK(hits >= 40);
    }

    TEST_CASE("detection is deterministic and ordered")
    {
        const Raster img = texture(96, 96, 5);
        const auto a = detect_features(img, 200);
        const auto b = detect_features(img, 200);
        REQUIRE(a.size() == b.size());
        REQUIRE(!a.empty());
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            CHECK(a[i].x == b[i].x);
            CHECK(a[i].y == b[i].y);
            CHECK(a[i].descriptor == b[i].descriptor);
            if (i > 0)
                CHECK(a[i - 1].response >= a[i].response);
        }
        CHECK(detect_features(img, 10).size() <= 10);
    }

    TEST_CASE("masked support drops keypoints")
    {
        Raster img = texture(96, 96, 6);
        for (int r = 0; r < 96; ++r)
            for (int c = 0; c < 48; ++c)
                img.set_valid(c, r, false);
        for (const auto &k : detect_features(img, 300))
            CHECK(k.x > 48.0);
    }

    TEST_CASE("multi-channel input is rejected")
    {
        CHECK_THROWS_AS(detect_features(Raster(32, 32, 3), 10), Error);
    }

    TEST_CASE("matching edge cases")
    {
        const auto a = detect_features(texture(96, 96, 7), 200);
        REQUIRE(a.size() > 5);
        CHECK(match_features(a, std::vector<Keypoint>{}).empty());

        const auto self = match_features(a, a);
        CHECK(self.size() == a.size());
        for (const auto &m : self)
        {
            CHECK(m.index_a == m.index_b);
            CHECK(m.distance == 0.0);
        }
    }

    TEST_CASE("shifted views match correctly")
    {
        const Raster big = texture(140, 120, 9);
        const Raster a = crop(big, 0, 0, 120, 110);
        const Raster b = crop(big, 5, 0, 120, 110);
        const auto ka = detect_features(a, 400);
        const auto kb = detect_features(b, 400);
        const auto matches = match_features(ka, kb);

        int shared = 0;
        for (const auto &k : ka)
            if (k.x >= 15.0 && k.x <= 105.0)
                ++shared;
        int correct = 0;
        for (const auto &m : matches)
        {
            const auto &p = ka[m.index_a];
            const auto &q = kb[m.index_b];
            if (p.x >= 15.0 && p.x <= 105.0 && std::hypot(p.x - 5.0 - q.x, p.y - q.y) < 1.0)
                ++correct;
        }
        REQUIRE(shared > 20);
        CHECK(correct >= 0.8 * shared);
    }
}

TEST_SUITE("stitcher")
{
    TEST_CASE("similarity algebra")
    {
        const Similarity2D s{1.3, 0.4, 2.0, -7.0};
        const Similarity2D t{0.8, -1.1, -3.0, 5.0};
        const Point2 p{3.5, -2.25};
        const Point2 round = s.inverse().apply(s.apply(p));
        CHECK(round.x == doctest::Approx(p.x));
        CHECK(round.y == doctest::Approx(p.y));
        const Point2 lhs = s.compose(t).apply(p);
        const Point2 rhs = s.apply(t.apply(p));
        CHECK(lhs.x == doctest::Approx(rhs.x));
        CHECK(lhs.y == doctest::Approx(rhs.y));
    }

    TEST_CASE("estimate_transform recovers a pure translation")
    {
        std::vector<Correspondence> pairs;
        SynthRng rng(2);
        for (int i = 0; i < 30; ++i)
        {
            const Point2 p{rng.uniform(0, 100), rng.uniform(0, 100)};
            pairs.push_back({p, {p.x + 5.0, p.y - 3.0}});
        }
        const auto est = estimate_transform(pairs);
        CHECK(est.inlier_count == 30);
        CHECK(est.transform.scale == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(est.transform.rotation) < 1e-12);
        CHECK(est.transform.tx == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(est.transform.ty == doctest::Approx(-3.0).epsilon(1e-12));
        for (const auto &c : pairs)
        {
            const Point2 q = est.transform.apply(c.from);
            CHECK(std::hypot(q.x - c.to.x, q.y - c.to.y) < 1e-9);
        }
    }

    TEST_CASE("estimate_transform with 30% outliers")
    {
        const Similarity2D truth{1.1, 0.25, 12.0, -4.0};
        std::vector<Correspondence> pairs;
        SynthRng rng(4);
        for (int i = 0; i < 100; ++i)
        {
            const Point2 p{rng.uniform(0, 200), rng.uniform(0, 200)};
            if (i % 10 < 7)
                pairs.push_back({p, truth.apply(p)});
            else
                pairs.push_back({p, {rng.uniform(0, 200), rng.uniform(0, 200)}});
        }
        const auto est = estimate_transform(pairs);
        CHECK(est.inlier_count >= 70);
        CHECK(std::abs(est.transform.rotation - truth.rotation) < 1e-3);
        CHECK(std::abs(est.transform.scale - truth.scale) < 1e-3);
        for (const Point2 p : {Point2{0, 0}, Point2{200, 0}, Point2{0, 200}, Point2{200, 200}})
        {
            const Point2 a = est.transform.apply(p), b = truth.apply(p);
            CHECK(std::hypot(a.x - b.x, a.y - b.y) < 0.1);
        }
    }

    TEST_CASE("estimate_transform degenerate input")
    {
        const std::vector<Correspondence> one{{{1, 1}, {2, 2}}};
        CHECK_THROWS_AS(estimate_transform(one), Error);
        const std::vector<Correspondence> same(5, Correspondence{{1, 1}, {2, 2}});
        CHECK_THROWS_AS(estimate_transform(same), Error);
    }

    TEST_CASE("gps_offset")
    {
        const ImageGeoTag a = tag_at(40.8, -96.7);
        const auto zero = gps_offset(a, a, kAnchor, 0.01);
        CHECK(zero.dx == 0.0);
        CHECK(zero.dy == 0.0);

        const ImageGeoTag north = tag_at(40.80001, -96.7);
        const auto d = gps_offset(a, north, kAnchor, 0.01);
        CHECK(std::abs(d.dx) < 1e-9);
        CHECK(d.dy == doctest::Approx(-111.3194907932736).epsilon(1e-9));

        const ImageGeoTag other = tag_at(40.80003, -96.70002);
        const auto ab = gps_offset(a, other, kAnchor, 0.05);
        const auto ba = gps_offset(other, a, kAnchor, 0.05);
        CHECK(ab.dx == doctest::Approx(-ba.dx));
        CHECK(ab.dy == doctest::Approx(-ba.dy));
    }

    TEST_CASE("register_pair on textured overlap")
    {
        const Raster big = texture(200, 150, 11);
        const Raster base = crop(big, 0, 0, 140, 120);
        const Raster next = crop(big, 37, 9, 140, 120);
        const auto reg = register_pair(base, next, tag_at(40.8, -96.7), tag_at(40.8, -96.7), 0.05, kAnchor);
        CHECK(reg.method == RegistrationMethod::FeatureBased);
        CHECK(reg.inlier_count >= kDefaultTau);
        CHECK(std::abs(reg.transform.tx - 37.0) < 0.5);
        CHECK(std::abs(reg.transform.ty - 9.0) < 0.5);

        const auto forced = register_pair(base, next, tag_at(40.8, -96.7), tag_at(40.8, -96.7), 0.05, kAnchor, 0);
        CHECK(forced.method == RegistrationMethod::FeatureBased);
        const auto refused =
            register_pair(base, next, tag_at(40.8, -96.7), tag_at(40.8, -96.7), 0.05, kAnchor, 100000);
        CHECK(refused.method == RegistrationMethod::GpsFallback);
    }

    TEST_CASE("register_pair falls back to GPS on featureless input")
    {
        const ImageGeoTag a = tag_at(40.8, -96.7);
        const ImageGeoTag b = tag_at(40.80002, -96.69998);
        const Raster flat(80, 80, 1, 120);
        const auto reg = register_pair(flat, flat, a, b, 0.05, kAnchor);
        CHECK(reg.method == RegistrationMethod::GpsFallback);
        CHECK(reg.inlier_count == 0);
        const PixelOffset off = gps_offset(a, b, kAnchor, 0.05);
        CHECK(reg.transform.scale == 1.0);
        CHECK(reg.transform.rotation == 0.0);
        CHECK(reg.transform.tx == off.dx);
        CHECK(reg.transform.ty == off.dy);
    }

    TEST_CASE("composite of one image")
    {
        const Raster img = texture(40, 30, 3);
        const std::vector<PlacedImage> one{{img, Similarity2D{}}};
        const SurfaceMap map = composite(one, kAnchor, 12.0, 7.0, 0.05);
        CHECK(map.mosaic == img);
        CHECK(map.anchor == kAnchor);
        CHECK(map.anchor_row == 12.0);
        CHECK(map.anchor_col == 7.0);
    }

    TEST_CASE("composite of disjoint images")
    {
        const Raster a = texture(20, 10, 1);
        const Raster b = texture(20, 10, 2);
        const std::vector<PlacedImage> placed{{a, Similarity2D{}}, {b, Similarity2D::translation(30.0, 0.0)}};
        const SurfaceMap map = composite(placed, kAnchor, 0.0, 0.0, 0.05);
        REQUIRE(map.mosaic.width() == 50);
        REQUIRE(map.mosaic.height() == 10);
        for (int r = 0; r < 10; ++r)
        {
            for (int c = 0; c < 20; ++c)
            {
                CHECK(map.mosaic.at(c, r) == a.at(c, r));
                CHECK(map.mosaic.at(c + 30, r) == b.at(c, r));
            }
            for (int c = 20; c < 30; ++c)
                CHECK_FALSE(map.mosaic.valid(c, r));
        }
    }

    TEST_CASE("composite overlap of a constant region")
    {
        const std::vector<PlacedImage> placed{{Raster(30, 20, 1, 77), Similarity2D{}},
                                              {Raster(30, 20, 1, 77), Similarity2D{1.0, 0.3, 10.5, 4.25}}};
        const SurfaceMap map = composite(placed, kAnchor, 0.0, 0.0, 0.05);
        for (int r = 0; r < map.mosaic.height(); ++r)
            for (int c = 0; c < map.mosaic.width(); ++c)
                if (map.mosaic.valid(c, r))
                    CHECK(map.mosaic.at(c, r) == 77);
    }

    TEST_CASE("composite preconditions")
    {
        CHECK_THROWS_AS(composite(std::vector<PlacedImage>{}, kAnchor, 0, 0, 0.05), Error);
        const std::vector<PlacedImage> shifted{{Raster(4, 4, 1), Similarity2D::translation(1, 0)}};
        CHECK_THROWS_AS(composite(shifted, kAnchor, 0, 0, 0.05), Error);
        const std::vector<PlacedImage> mixed{{Raster(4, 4, 1), Similarity2D{}}, {Raster(4, 4, 3), Similarity2D{}}};
        CHECK_THROWS_AS(composite(mixed, kAnchor, 0, 0, 0.05), Error);
    }

    TEST_CASE("stitch_views with a single view anchors at its geotag")
    {
        const GroundScene scene = make_deck_scene(30.0, 8.0, 40.0, 0, 4);
        CameraRig rig;
        rig.h = 10.0;
        rig.theta = std::numbers::pi / 3;
        rig.alpha = std::numbers::pi / 9;
        rig.rows = rig.cols = 81;
        rig.l = 5.0;
        const Raster image = render_view(rig, scene);
        rig.l = 0.0;
        const ImageGeoTag tag = tag_at(40.8, -96.7);
        const std::vector<GeoTaggedView> views{{image, rig, tag, std::nullopt}};
        const StitchResult result = stitch_views(views);
        REQUIRE(result.steps.size() == 1);
        CHECK(result.map.anchor == tag.position());
        CHECK(result.map.mosaic == render_orthophoto(rig, image, result.grid));
        CHECK_THROWS_AS(stitch_views(std::vector<GeoTaggedView>{}), Error);
    }
}
