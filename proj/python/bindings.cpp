#include <deckfuse/catalog.hpp>
#include <deckfuse/cli.hpp>
#include <deckfuse/dataset.hpp>
#include <deckfuse/error.hpp>
#include <deckfuse/projection.hpp>
#include <deckfuse/records_json.hpp>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace deckfuse;
using nlohmann::json;

namespace
{

py::object to_python(const json &j)
{
    switch (j.type())
    {
    case json::value_t::null:
        return py::none();
    case json::value_t::boolean:
        return py::bool_(j.get<bool>());
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
        return py::int_(j.get<long long>());
    case json::value_t::number_float:
        return py::float_(j.get<double>());
    case json::value_t::string:
        return py::str(j.get<std::string>());
    case json::value_t::array: {
        py::list out;
        for (const auto &v : j)
            out.append(to_python(v));
        return out;
    }
    default: {
        py::dict out;
        for (const auto &[k, v] : j.items())
            out[py::str(k)] = to_python(v);
        return out;
    }
    }
}

template <typename T>
py::list records(const std::vector<T> &items)
{
    py::list out;
    for (const auto &item : items)
        out.append(to_python(to_json(item)));
    return out;
}

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, 3) array plus an optional boolean validity mask.
Raster raster_from(const ImageArray &a, const std::optional<py::array_t<bool>> &mask)
{
    if (a.ndim() != 2 && !(a.ndim() == 3 && (a.shape(2) == 1 || a.shape(2) == 3)))
        throw py::value_error("expected an (H, W) or (H, W, 3) uint8 array");
    const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    Raster r(w, h, c, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
    if (mask)
    {
        const auto m = mask->unchecked<2>();
        if (m.shape(0) != h || m.shape(1) != w)
            throw py::value_error("mask shape must match the image");
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(h) * w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                bits[static_cast<std::size_t>(y) * w + x] = m(y, x) ? 1 : 0;
        r.set_mask(std::move(bits));
    }
    return r;
}

py::tuple raster_to(const Raster &r)
{
    std::vector<py::ssize_t> shape{r.height(), r.width()};
    if (r.channels() == 3)
        shape.push_back(3);
    ImageArray pixels(shape);
    std::copy(r.pixels().begin(), r.pixels().end(), pixels.mutable_data());
    py::array_t<bool> mask({r.height(), r.width()});
    auto m = mask.mutable_unchecked<2>();
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x)
            m(y, x) = r.valid(x, y);
    return py::make_tuple(pixels, mask);
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Bridge-deck inspection data fusion core";

    py::register_exception<Error>(m, "DeckfuseError", PyExc_RuntimeError);

    py::class_<CameraRig>(m, "CameraRig")
        .def(py::init<>())
        .def(py::init([](double l, double d, double h, double theta, double gamma, double alpha, int rows, int cols) {
                 CameraRig rig{l, d, h, theta, gamma, alpha, rows, cols};
                 validate_rig(rig);
                 return rig;
             }),
             py::arg("l") = 0.0, py::arg("d") = 0.0, py::arg("h"), py::arg("theta"), py::arg("gamma") = 0.0,
             py::arg("alpha"), py::arg("rows"), py::arg("cols"))
        .def_readwrite("l", &CameraRig::l)
        .def_readwrite("d", &CameraRig::d)
        .def_readwrite("h", &CameraRig::h)
        .def_readwrite("theta", &CameraRig::theta)
        .def_readwrite("gamma", &CameraRig::gamma)
        .def_readwrite("alpha", &CameraRig::alpha)
        .def_readwrite("rows", &CameraRig::rows)
        .def_readwrite("cols", &CameraRig::cols)
        .def("__repr__", [](const CameraRig &r) { return "CameraRig(" + camera_to_json(r) + ")"; });

    py::class_<OrthoGrid>(m, "OrthoGrid")
        .def(py::init([](double east, double north, double gsd, int rows, int cols) {
                 return OrthoGrid{{east, north}, gsd, rows, cols};
             }),
             py::arg("east"), py::arg("north"), py::arg("gsd"), py::arg("rows"), py::arg("cols"))
        .def_property_readonly("east", [](const OrthoGrid &g) { return g.origin.east; })
        .def_property_readonly("north", [](const OrthoGrid &g) { return g.origin.north; })
        .def_readonly("gsd", &OrthoGrid::gsd)
        .def_readonly("rows", &OrthoGrid::rows)
        .def_readonly("cols", &OrthoGrid::cols);

    m.def(
        "ipm_pixel",
        [](const CameraRig &rig, double x, double y) -> std::optional<std::pair<double, double>> {
            const auto p = ipm_pixel(rig, {x, y});
            if (!p)
                return std::nullopt;
            return std::make_pair(p->u, p->v);
        },
        py::arg("rig"), py::arg("x"), py::arg("y"), "Ground point to (row, col), or None when out of view.");
    m.def(
        "ground_of_pixel",
        [](const CameraRig &rig, double u, double v) -> std::optional<std::pair<double, double>> {
            const auto g = ground_of_pixel(rig, u, v);
            if (!g)
                return std::nullopt;
            return std::make_pair(g->x, g->y);
        },
        py::arg("rig"), py::arg("row"), py::arg("col"), "Pixel to ground (x, y), or None above the horizon.");
    m.def(
        "grid_covering",
        [](const CameraRig &rig, double gsd, std::optional<double> max_range_m) {
            return grid_covering(footprint_box(rig, max_range_m), {rig.l, rig.d}, gsd);
        },
        py::arg("rig"), py::arg("gsd"), py::arg("max_range_m") = py::none());
    m.def(
        "render_orthophoto",
        [](const CameraRig &rig, const ImageArray &image, const OrthoGrid &grid,
           const std::optional<py::array_t<bool>> &mask) {
            return raster_to(render_orthophoto(rig, raster_from(image, mask), grid));
        },
        py::arg("rig"), py::arg("image"), py::arg("grid"), py::arg("mask") = py::none(),
        "Returns (pixels, valid_mask).");
    m.def("nominal_gsd", &nominal_gsd, py::arg("rig"));
    m.def(
        "plan_flight_height",
        [](double width, double alpha, int cols) {
            const auto p = plan_flight_height(width, alpha, cols);
            return py::make_tuple(p.height_m, p.gsd_m);
        },
        py::arg("deck_width_m"), py::arg("alpha"), py::arg("cols"), "Returns (height_m, gsd_m).");

    m.def(
        "to_local",
        [](double lat, double lon, double anchor_lat, double anchor_lon) {
            const LocalPoint p = to_local({lat, lon}, {anchor_lat, anchor_lon});
            return py::make_tuple(p.east, p.north);
        },
        py::arg("lat"), py::arg("lon"), py::arg("anchor_lat"), py::arg("anchor_lon"));
    m.def(
        "to_geo",
        [](double east, double north, double anchor_lat, double anchor_lon) {
            const GeoPoint g = to_geo({east, north}, {anchor_lat, anchor_lon});
            return py::make_tuple(g.lat, g.lon);
        },
        py::arg("east"), py::arg("north"), py::arg("anchor_lat"), py::arg("anchor_lon"));

    m.def(
        "load_pnm", [](const py::bytes &data) {
            const std::string s = data;
            return raster_to(load_pnm(std::span(reinterpret_cast<const std::uint8_t *>(s.data()), s.size())));
        },
        py::arg("data"), "Returns (pixels, valid_mask).");
    m.def(
        "save_pnm",
        [](const ImageArray &image) {
            const Bytes b = save_pnm(raster_from(image, std::nullopt));
            return py::bytes(reinterpret_cast<const char *>(b.data()), b.size());
        },
        py::arg("image"));

    py::class_<Store>(m, "Store")
        .def(py::init(&Store::open), py::arg("root"))
        .def("persist", &Store::persist)
        .def("bridges", [](const Store &s) { return records(s.bridges()); })
        .def("defects", [](const Store &s) { return records(s.defects()); })
        .def("maps", [](const Store &s) { return records(s.maps()); })
        .def(
            "query_bridges",
            [](const Store &s, double a, double b, double c, double d) { return records(s.query_bridges({a, b, c, d})); },
            py::arg("min_lat"), py::arg("min_lon"), py::arg("max_lat"), py::arg("max_lon"))
        .def(
            "query_defects",
            [](const Store &s, double a, double b, double c, double d) { return records(s.query_defects({a, b, c, d})); },
            py::arg("min_lat"), py::arg("min_lon"), py::arg("max_lat"), py::arg("max_lon"))
        .def("map_image", [](const Store &s, const std::string &id) { return raster_to(s.map_image(id)); })
        .def("seed_demo", [](Store &s) { seed_demo_store(s); });

    m.def(
        "run_cli",
        [](const std::vector<std::string> &args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");
}
