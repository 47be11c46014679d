#include <deckfuse/error.hpp>
#include <deckfuse/projection.hpp>

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace deckfuse;

namespace
{

constexpr double kPi = std::numbers::pi;

CameraRig reference_rig()
{
    CameraRig rig;
    rig.h = 10.0;
    rig.theta = kPi / 4;
    rig.alpha = kPi / 4;
    rig.rows = 101;
    rig.cols = 101;
    return rig;
}

CameraRig tilted_rig()
{
    CameraRig rig = reference_rig();
    rig.theta = kPi / 3;
    rig.alpha = kPi / 9;
    return rig;
}

} // namespace

TEST_SUITE("projection")
{
    TEST_CASE("ipm_pixel reference values")
    {
        const CameraRig rig = reference_rig();
        const auto axis = ipm_pixel(rig, {10.0, 0.0});
        REQUIRE(axis);
        CHECK(axis->u == doctest::Approx(50.0).epsilon(1e-12));
        CHECK(axis->v == doctest::Approx(50.0).epsilon(1e-12));

        // 30-digit evaluations of the formula.
        const auto far = ipm_pixel(rig, {20.0, 0.0});
        REQUIRE(far);
        CHECK(far->u == doctest::Approx(29.516723530086655).epsilon(1e-12));
        CHECK(far->v == doctest::Approx(50.0).epsilon(1e-12));

        const auto edge = ipm_pixel(rig, {10.0, 10.0});
        REQUIRE(edge);
        CHECK(edge->u == doctest::Approx(39.18265520306073).epsilon(1e-12));
        CHECK(edge->v == doctest::Approx(100.0).epsilon(1e-12));
    }

    TEST_CASE("ipm_pixel out of view")
    {
        const CameraRig rig = reference_rig();
        CHECK_FALSE(ipm_pixel(rig, {0.0, 0.0}));   // nadir, rho = 0
        CHECK_FALSE(ipm_pixel(rig, {-5.0, 0.0}));  // behind the camera
        CHECK_FALSE(ipm_pixel(rig, {10.0, 10.5})); // past the azimuth edge
        CHECK_FALSE(ipm_pixel(tilted_rig(), {1.0, 0.0})); // below the bottom row
    }

    TEST_CASE("ground_of_pixel reference values")
    {
        const CameraRig rig = reference_rig();
        const auto center = ground_of_pixel(rig, 50.0, 50.0);
        REQUIRE(center);
        CHECK(center->x == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(std::abs(center->y) < 1e-12);

        CHECK_FALSE(ground_of_pixel(rig, 0.0, 50.0)); // on the horizon

        const auto nadir = ground_of_pixel(rig, 100.0, 50.0);
        REQUIRE(nadir);
        CHECK(nadir->x == 0.0);
        CHECK(nadir->y == 0.0);

        CHECK_THROWS_AS(ground_of_pixel(rig, -0.5, 0.0), Error);
        CHECK_THROWS_AS(ground_of_pixel(rig, 0.0, 101.0), Error);
    }

    TEST_CASE("inverse consistency")
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const CameraRig rig = tilted_rig();
        for (int i = 0; i < 2000; ++i)
        {
            const double u = unit(rng) * (rig.rows - 1);
            const double v = unit(rng) * (rig.cols - 1);
            const auto g = ground_of_pixel(rig, u, v);
            REQUIRE(g);
            const auto p = ipm_pixel(rig, *g);
            REQUIRE(p);
            CHECK(std::abs(p->u - u) < 1e-6);
            CHECK(std::abs(p->v - v) < 1e-6);
        }
    }

    TEST_CASE("printed form matches the implemented form off the singular line")
    {
        const double h = 7.5;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> coord(0.2, 40.0);
        for (int i = 0; i < 1000; ++i)
        {
            const double dx = coord(rng);
            const double dy = (i % 2 ? 1 : -1) * coord(rng);
            const double az = std::atan2(dy, dx);
            const double printed = std::atan(h * std::sin(az) / dy);
            const double implemented = std::atan(h / std::hypot(dx, dy));
            CHECK(std::abs(printed - implemented) < 1e-12);
        }
    }

    TEST_CASE("rows grow toward the nadir along the axis")
    {
        const CameraRig rig = reference_rig();
        double previous = -1.0;
        for (double x = 30.0; x > 0.3; x -= 0.25)
        {
            const auto p = ipm_pixel(rig, {x, 0.0});
            REQUIRE(p);
            CHECK(p->u > previous);
            previous = p->u;
        }
    }

    TEST_CASE("camera pose is equivalent to moving the ground")
    {
        CameraRig moved = tilted_rig();
        moved.l = 3.0;
        moved.d = -2.0;
        moved.gamma = 0.4;
        const CameraRig origin = tilted_rig();
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> coord(-25.0, 25.0);
        for (int i = 0; i < 500; ++i)
        {
            const GroundPoint g{coord(rng), coord(rng)};
            const double dx = g.x - moved.l, dy = g.y - moved.d;
            const GroundPoint local{std::cos(-moved.gamma) * dx - std::sin(-moved.gamma) * dy,
                                    std::sin(-moved.gamma) * dx + std::cos(-moved.gamma) * dy};
            const auto a = ipm_pixel(moved, g);
            const auto b = ipm_pixel(origin, local);
            REQUIRE(a.has_value() == b.has_value());
            if (a)
            {
                CHECK(a->u == doctest::Approx(b->u).epsilon(1e-9));
                CHECK(a->v == doctest::Approx(b->v).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("render_orthophoto")
    {
        const CameraRig rig = tilted_rig();
        const Raster gray(rig.cols, rig.rows, 1, 77);
        const OrthoGrid grid = grid_covering(footprint_box(rig), {0.0, 0.0}, 0.1);
        const Raster ortho = render_orthophoto(rig, gray, grid);
        REQUIRE(ortho.width() == grid.cols);
        REQUIRE(ortho.height() == grid.rows);
        REQUIRE(ortho.has_mask());
        for (int row = 0; row < grid.rows; ++row)
        {
            for (int col = 0; col < grid.cols; ++col)
            {
                const bool in_view = ipm_pixel(rig, grid.cell_center(row, col)).has_value();
                CHECK(ortho.valid(col, row) == in_view);
                if (in_view)
                    CHECK(ortho.at(col, row) == 77);
            }
        }

        OrthoGrid behind = grid;
        behind.origin = {-100.0, 50.0};
        CHECK(render_orthophoto(rig, gray, behind).valid_count() == 0);

        CHECK_THROWS_AS(render_orthophoto(rig, Raster(10, 10, 1), grid), Error);
    }

    TEST_CASE("ground_footprint")
    {
        CHECK_FALSE(ground_footprint(reference_rig()));

        // Nadir: the corners lie h tan(alpha) from the camera.
        CameraRig nadir = reference_rig();
        nadir.theta = kPi / 2;
        nadir.alpha = kPi / 6;
        const auto corners = ground_footprint(nadir);
        REQUIRE(corners);
        for (const auto &c : *corners)
            CHECK(std::hypot(c.x, c.y) == doctest::Approx(5.773502691896258).epsilon(1e-12));

        const CameraRig rig = tilted_rig();
        const auto quad = ground_footprint(rig);
        REQUIRE(quad);
        const double u_max = rig.rows - 1.0, v_max = rig.cols - 1.0;
        const SourcePixel expected[4] = {{0, 0}, {0, v_max}, {u_max, v_max}, {u_max, 0}};
        for (int i = 0; i < 4; ++i)
        {
            const auto p = ipm_pixel(rig, (*quad)[i]);
            REQUIRE(p);
            CHECK(std::abs(p->u - expected[i].u) < 1e-6);
            CHECK(std::abs(p->v - expected[i].v) < 1e-6);
        }
    }

    TEST_CASE("grid_covering puts the camera on a cell center")
    {
        const CameraRig rig = tilted_rig();
        const OrthoGrid grid = grid_covering(footprint_box(rig), {0.0, 0.0}, 0.07);
        const double col = -grid.origin.east / grid.gsd;
        const double row = grid.origin.north / grid.gsd;
        CHECK(std::abs(col - std::round(col)) < 1e-9);
        CHECK(std::abs(row - std::round(row)) < 1e-9);
        CHECK_THROWS_AS(footprint_box(reference_rig()), Error);
    }

    TEST_CASE("plan_flight_height")
    {
        const FlightHeightPlan a = plan_flight_height(10.0, kPi / 4, 100);
        CHECK(a.height_m == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(a.gsd_m == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(plan_flight_height(10.0, kPi / 6, 100).height_m == doctest::Approx(8.660254037844386).epsilon(1e-12));
        const FlightHeightPlan b = plan_flight_height(20.0, kPi / 4, 100);
        CHECK(b.height_m == doctest::Approx(2 * a.height_m));
        CHECK(b.gsd_m == doctest::Approx(2 * a.gsd_m));
        CHECK_THROWS_AS(plan_flight_height(0.0, kPi / 4, 100), Error);
        CHECK_THROWS_AS(plan_flight_height(10.0, kPi / 2, 100), Error);
        CHECK_THROWS_AS(plan_flight_height(10.0, kPi / 4, 1), Error);
    }

    TEST_CASE("validate_rig")
    {
        CameraRig rig = reference_rig();
        rig.h = 0.0;
        CHECK_THROWS_AS(validate_rig(rig), Error);
        rig = reference_rig();
        rig.rows = 1;
        CHECK_THROWS_AS(validate_rig(rig), Error);
    }
}
