#include <deckfuse/error.hpp>
#include <deckfuse/raster.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace deckfuse
{

namespace
{

void check_dims(int width, int height, int channels)
{
    if (width < 0 || height < 0)
        throw Error(ErrorCode::PreconditionViolation, "negative raster dimensions");
    if (channels != 1 && channels != 3)
        throw Error(ErrorCode::PreconditionViolation, "raster channels must be 1 or 3");
}

class HeaderReader
{
  public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size())
        {
            const auto c = bytes_[pos_];
            if (c == '#')
            {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r')
                    ++pos_;
            }
            else if (std::isspace(c))
            {
                ++pos_;
            }
            else
            {
                break;
            }
        }
    }

    long number(const char *what)
    {
        skip_space_and_comments();
        long value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_]))
        {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > (1L << 30))
                throw Error(ErrorCode::MalformedHeader, std::string(what) + " too large");
            ++pos_;
            ++digits;
        }
        if (digits == 0)
            throw Error(ErrorCode::MalformedHeader, std::string("non-numeric ") + what);
        return value;
    }

    void single_whitespace()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw Error(ErrorCode::MalformedHeader, "missing whitespace after maxval");
        ++pos_;
    }

    std::size_t position() const { return pos_; }
    void advance(std::size_t n) { pos_ += n; }

  private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void append(Bytes &out, const std::string &s)
{
    out.insert(out.end(), s.begin(), s.end());
}

void put_u16(Bytes &out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

void put_u32(Bytes &out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

} // namespace

Raster::Raster(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels)
{
    check_dims(width, height, channels);
    pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Raster::Raster(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels))
{
    check_dims(width, height, channels);
    if (pixels_.size() != static_cast<std::size_t>(width) * height * channels)
        throw Error(ErrorCode::DimensionMismatch, "pixel buffer does not match width*height*channels");
}

void Raster::set_valid(int col, int row, bool is_valid)
{
    if (!mask_)
        mask_.emplace(static_cast<std::size_t>(width_) * height_, std::uint8_t{1});
    (*mask_)[index(col, row)] = is_valid ? 1 : 0;
}

void Raster::set_mask(std::vector<std::uint8_t> mask)
{
    if (mask.size() != static_cast<std::size_t>(width_) * height_)
        throw Error(ErrorCode::DimensionMismatch, "mask does not match width*height");
    for (auto &m : mask)
        m = m ? 1 : 0;
    mask_ = std::move(mask);
}

std::size_t Raster::valid_count() const
{
    if (!mask_)
        return static_cast<std::size_t>(width_) * height_;
    return static_cast<std::size_t>(std::count(mask_->begin(), mask_->end(), std::uint8_t{1}));
}

Raster load_pnm(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw Error(ErrorCode::MalformedHeader, "expected binary P5 or P6 magic");
    const int channels = bytes[1] == '5' ? 1 : 3;

    HeaderReader reader(bytes);
    reader.advance(2);
    if (reader.position() >= bytes.size() || !std::isspace(bytes[reader.position()]))
        throw Error(ErrorCode::MalformedHeader, "magic must be followed by whitespace");
    const long width = reader.number("width");
    const long height = reader.number("height");
    const long maxval = reader.number("maxval");
    if (maxval != 255)
        throw Error(ErrorCode::UnsupportedMaxval, "maxval " + std::to_string(maxval) + " (only 255 supported)");
    reader.single_whitespace();

    const std::size_t expected = static_cast<std::size_t>(width) * height * channels;
    const std::size_t start = reader.position();
    if (bytes.size() - start < expected)
        throw Error(ErrorCode::TruncatedPayload, "expected " + std::to_string(expected) + " sample bytes, found " +
                                                     std::to_string(bytes.size() - start));
    std::vector<std::uint8_t> pixels(bytes.begin() + start, bytes.begin() + start + expected);
    return Raster(static_cast<int>(width), static_cast<int>(height), channels, std::move(pixels));
}

Bytes save_pnm(const Raster &r)
{
    Bytes out;
    append(out, std::string(r.channels() == 1 ? "P5" : "P6") + "\n" + std::to_string(r.width()) + " " +
                    std::to_string(r.height()) + "\n255\n");
    out.insert(out.end(), r.pixels().begin(), r.pixels().end());
    return out;
}

Bytes save_mask(const Raster &r)
{
    Raster mask_image(r.width(), r.height(), 1, std::uint8_t{255});
    if (r.mask())
    {
        const auto &m = *r.mask();
        auto px = mask_image.pixels();
        for (std::size_t i = 0; i < m.size(); ++i)
            px[i] = m[i] ? 255 : 0;
    }
    return save_pnm(mask_image);
}

void attach_mask(Raster &r, const Raster &mask_image)
{
    if (mask_image.width() != r.width() || mask_image.height() != r.height() || mask_image.channels() != 1)
        throw Error(ErrorCode::DimensionMismatch, "mask image does not match raster");
    const auto px = mask_image.pixels();
    if (std::all_of(px.begin(), px.end(), [](std::uint8_t v) { return v != 0; }))
    {
        r.clear_mask();
        return;
    }
    r.set_mask(std::vector<std::uint8_t>(px.begin(), px.end()));
}

Bytes encode_bmp(const Raster &r)
{
    const std::uint32_t row_bytes = (3u * static_cast<std::uint32_t>(r.width()) + 3u) / 4u * 4u;
    const std::uint32_t data_size = row_bytes * static_cast<std::uint32_t>(r.height());
    const std::uint32_t file_size = 54u + data_size;

    Bytes out;
    out.reserve(file_size);
    out.push_back('B');
    out.push_back('M');
    put_u32(out, file_size);
    put_u32(out, 0);
    put_u32(out, 54);

    put_u32(out, 40);
    put_u32(out, static_cast<std::uint32_t>(r.width()));
    put_u32(out, static_cast<std::uint32_t>(r.height()));
    put_u16(out, 1);
    put_u16(out, 24);
    put_u32(out, 0);
    put_u32(out, data_size);
    put_u32(out, 2835); // 72 dpi
    put_u32(out, 2835);
    put_u32(out, 0);
    put_u32(out, 0);

    for (int row = r.height() - 1; row >= 0; --row)
    {
        const std::size_t row_start = out.size();
        for (int col = 0; col < r.width(); ++col)
        {
            if (!r.valid(col, row))
            {
                out.push_back(255);
                out.push_back(0);
                out.push_back(255);
            }
            else if (r.channels() == 1)
            {
                const auto g = r.at(col, row);
                out.insert(out.end(), {g, g, g});
            }
            else
            {
                out.push_back(r.at(col, row, 2));
                out.push_back(r.at(col, row, 1));
                out.push_back(r.at(col, row, 0));
            }
        }
        while (out.size() - row_start < row_bytes)
            out.push_back(0);
    }
    return out;
}

std::optional<double> sample_bilinear(const Raster &r, double x, double y, int channel)
{
    if (r.empty() || !(x >= 0.0) || !(y >= 0.0) || x > r.width() - 1 || y > r.height() - 1)
        return std::nullopt;

    const int x0 = std::min(static_cast<int>(std::floor(x)), r.width() - 1);
    const int y0 = std::min(static_cast<int>(std::floor(y)), r.height() - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const int x1 = fx > 0.0 ? x0 + 1 : x0;
    const int y1 = fy > 0.0 ? y0 + 1 : y0;

    if (r.has_mask())
    {
        if (!r.valid(x0, y0) || !r.valid(x1, y0) || !r.valid(x0, y1) || !r.valid(x1, y1))
            return std::nullopt;
    }

    const double top = (1.0 - fx) * r.at(x0, y0, channel) + fx * r.at(x1, y0, channel);
    const double bottom = (1.0 - fx) * r.at(x0, y1, channel) + fx * r.at(x1, y1, channel);
    return (1.0 - fy) * top + fy * bottom;
}

Raster to_luminance(const Raster &r)
{
    if (r.channels() == 1)
        return r;
    Raster out(r.width(), r.height(), 1);
    for (int row = 0; row < r.height(); ++row)
        for (int col = 0; col < r.width(); ++col)
        {
            const double y = 0.299 * r.at(col, row, 0) + 0.587 * r.at(col, row, 1) + 0.114 * r.at(col, row, 2);
            out.set(col, row, 0, static_cast<std::uint8_t>(std::lround(std::clamp(y, 0.0, 255.0))));
        }
    if (r.mask())
        out.set_mask(*r.mask());
    return out;
}

Bytes read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::MissingFile, "cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::string &path, std::span<const std::uint8_t> bytes)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path())
        fs::create_directories(target.parent_path(), ec);
    const fs::path temp = target.string() + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::IoFailure, "cannot write " + temp.string());
        out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw Error(ErrorCode::IoFailure, "short write to " + temp.string());
    }
    fs::rename(temp, target, ec);
    if (ec)
        throw Error(ErrorCode::IoFailure, "rename " + temp.string() + ": " + ec.message());
}

} // namespace deckfuse
