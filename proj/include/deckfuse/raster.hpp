#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deckfuse
{

using Bytes = std::vector<std::uint8_t>;

/// Row-major 8-bit image with 1 or 3 interleaved channels and an optional
/// per-pixel validity mask. A pixel flagged invalid is treated as no-data by
/// every consumer (sampling, feature detection, compositing, encoding).
class Raster
{
  public:
    Raster() = default;
    Raster(int width, int height, int channels, std::uint8_t fill = 0);
    Raster(int width, int height, int channels, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    std::uint8_t at(int col, int row, int channel = 0) const
    {
        return pixels_[index(col, row) * channels_ + channel];
    }
    void set(int col, int row, int channel, std::uint8_t value)
    {
        pixels_[index(col, row) * channels_ + channel] = value;
    }

    bool has_mask() const noexcept { return mask_.has_value(); }
    bool valid(int col, int row) const
    {
        return !mask_ || (*mask_)[index(col, row)] != 0;
    }
    /// Creates an all-valid mask if none is present.
    void set_valid(int col, int row, bool is_valid);
    void set_mask(std::vector<std::uint8_t> mask);
    void clear_mask() { mask_.reset(); }
    /// Mask bytes (0 = invalid, nonzero = valid); empty optional when maskless.
    const std::optional<std::vector<std::uint8_t>> &mask() const noexcept { return mask_; }
    std::size_t valid_count() const;

    bool operator==(const Raster &other) const = default;

  private:
    std::size_t index(int col, int row) const
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<std::uint8_t> pixels_;
    std::optional<std::vector<std::uint8_t>> mask_;
};

/// Parses binary P5/P6 with maxval 255. Header comments are accepted.
Raster load_pnm(std::span<const std::uint8_t> bytes);
Bytes save_pnm(const Raster &r);

/// P5 encoding of the validity mask: 255 valid, 0 invalid.
Bytes save_mask(const Raster &r);
/// Attaches a mask previously written by save_mask. Dimensions must agree.
void attach_mask(Raster &r, const Raster &mask_image);

/// 24-bit BMP (BITMAPINFOHEADER, bottom-up, 4-byte row padding). Invalid
/// pixels are drawn magenta.
Bytes encode_bmp(const Raster &r);

/// Bilinear sample of one channel at subpixel (x = col, y = row). Returns
/// nullopt outside [0,w-1]x[0,h-1] or when a contributing pixel with
/// nonzero weight is masked out.
std::optional<double> sample_bilinear(const Raster &r, double x, double y, int channel = 0);

/// Rec. 601 luma for 3-channel input; single-channel rasters are returned
/// as-is. The mask is carried over.
Raster to_luminance(const Raster &r);

Bytes read_file(const std::string &path);
void write_file_atomic(const std::string &path, std::span<const std::uint8_t> bytes);

} // namespace deckfuse
