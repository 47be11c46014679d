#include <deckfuse/error.hpp>
#include <deckfuse/raster.hpp>

#include <doctest.h>

#include <string>

using namespace deckfuse;

namespace
{

Bytes bytes_of(const std::string &s)
{
    return Bytes(s.begin(), s.end());
}

ErrorCode code_of(const Bytes &b)
{
    try
    {
        load_pnm(b);
    }
    catch (const Error &e)
    {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoFailure;
}

} // namespace

TEST_SUITE("raster")
{
    TEST_CASE("load_pnm reads a white P6 pixel")
    {
        Bytes b = bytes_of("P6\n1 1\n255\n");
        b.insert(b.end(), {0xFF, 0xFF, 0xFF});
        const Raster r = load_pnm(b);
        CHECK(r.width() == 1);
        CHECK(r.height() == 1);
        CHECK(r.channels() == 3);
        CHECK_FALSE(r.has_mask());
        for (int c = 0; c < 3; ++c)
            CHECK(r.at(0, 0, c) == 255);
    }

    TEST_CASE("load_pnm rejects bad headers and payloads")
    {
        CHECK(code_of(bytes_of("P3\n1 1\n255\n255 255 255\n")) == ErrorCode::MalformedHeader);
        CHECK(code_of(bytes_of("P5\nx 1\n255\n\x01")) == ErrorCode::MalformedHeader);
        CHECK(code_of(bytes_of("P5\n2 2\n255\n\x01\x02")) == ErrorCode::TruncatedPayload);
        CHECK(code_of(bytes_of("P5\n1 1\n65535\n\x01\x02")) == ErrorCode::UnsupportedMaxval);
    }

    TEST_CASE("load_pnm accepts header comments")
    {
        Bytes b = bytes_of("P5\n# made by hand\n2 1\n# still header\n255\n");
        b.insert(b.end(), {7, 9});
        const Raster r = load_pnm(b);
        CHECK(r.at(0, 0) == 7);
        CHECK(r.at(1, 0) == 9);
    }

    TEST_CASE("save_pnm writes the canonical header")
    {
        const Raster gray(1, 1, 1, 128);
        Bytes expected = bytes_of("P5\n1 1\n255\n");
        expected.push_back(0x80);
        CHECK(save_pnm(gray) == expected);

        const Raster color(2, 2, 3, 5);
        const Bytes b = save_pnm(color);
        CHECK(b.size() == std::string("P6\n2 2\n255\n").size() + 12);
        CHECK(load_pnm(b) == color);
        CHECK(save_pnm(load_pnm(b)) == b);
    }

    TEST_CASE("save_mask encodes validity")
    {
        Raster r(2, 2, 1, 3);
        const Bytes plain = save_mask(r);
        CHECK(Bytes(plain.end() - 4, plain.end()) == Bytes{0xFF, 0xFF, 0xFF, 0xFF});

        r.set_valid(0, 0, false);
        const Bytes masked = save_mask(r);
        CHECK(masked[masked.size() - 4] == 0x00);

        Raster copy = load_pnm(save_pnm(r));
        attach_mask(copy, load_pnm(masked));
        CHECK(copy == r);
    }

    TEST_CASE("encode_bmp layout")
    {
        const Bytes one = encode_bmp(Raster(1, 1, 1, 40));
        CHECK(one.size() == 58);
        CHECK(one[0] == 'B');
        CHECK(one[1] == 'M');
        // Gray replicates into B, G, R.
        CHECK(one[54] == 40);
        CHECK(one[55] == 40);
        CHECK(one[56] == 40);
        CHECK(encode_bmp(Raster(2, 2, 3)).size() == 70);

        Raster masked(1, 1, 1, 40);
        masked.set_valid(0, 0, false);
        const Bytes m = encode_bmp(masked);
        CHECK(m[54] == 255); // B
        CHECK(m[55] == 0);   // G
        CHECK(m[56] == 255); // R
    }

    TEST_CASE("encode_bmp stores rows bottom-up")
    {
        Raster r(1, 2, 1);
        r.set(0, 0, 0, 10);
        r.set(0, 1, 0, 200);
        const Bytes b = encode_bmp(r);
        CHECK(b[54] == 200);
        CHECK(b[58] == 10);
    }

    TEST_CASE("sample_bilinear")
    {
        Raster r(2, 1, 1);
        r.set(0, 0, 0, 0);
        r.set(1, 0, 0, 100);
        CHECK(*sample_bilinear(r, 0.0, 0.0) == doctest::Approx(0.0));
        CHECK(*sample_bilinear(r, 1.0, 0.0) == doctest::Approx(100.0));
        CHECK(*sample_bilinear(r, 0.5, 0.0) == doctest::Approx(50.0));
        CHECK_FALSE(sample_bilinear(r, -0.01, 0.0));
        CHECK_FALSE(sample_bilinear(r, 0.0, 0.01));

        r.set_valid(1, 0, false);
        CHECK_FALSE(sample_bilinear(r, 0.5, 0.0));
        // A masked neighbour with zero weight does not matter.
        CHECK(*sample_bilinear(r, 0.0, 0.0) == doctest::Approx(0.0));
    }

    TEST_CASE("to_luminance keeps the mask")
    {
        Raster rgb(1, 1, 3);
        rgb.set(0, 0, 0, 255);
        rgb.set_valid(0, 0, false);
        const Raster y = to_luminance(rgb);
        CHECK(y.channels() == 1);
        CHECK_FALSE(y.valid(0, 0));
    }
}
