#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kanfire {

// Affine north-up georeference. pixel_size_y is negative for north-up grids.
struct GridGeoreference {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size_x = 1.0;
    double pixel_size_y = -1.0;
    std::string crs_label;

    // Map coordinates of the center of pixel (row, col).
    double center_x(std::size_t col) const { return origin_x + (static_cast<double>(col) + 0.5) * pixel_size_x; }
    double center_y(std::size_t row) const { return origin_y + (static_cast<double>(row) + 0.5) * pixel_size_y; }

    // Area of one pixel in square map units.
    double pixel_area() const;

    void validate() const;
};

// Tolerance used for every georeference comparison.
inline constexpr double kAlignTolerance = 1e-9;

struct Band {
    std::string name;
    std::vector<float> values;  // row-major, north-up
};

// A georeferenced stack of equally-sized float32 bands.
//
// Grids are built once (constructor + add_band) and then treated as immutable
// values; all analysis functions take them by const reference.
class RasterGrid {
public:
    RasterGrid() = default;
    RasterGrid(std::size_t width, std::size_t height, GridGeoreference georef,
               std::optional<float> nodata = std::nullopt);

    // Appends a band. Throws InvalidArgument on size mismatch or duplicate name.
    RasterGrid& add_band(std::string name, std::vector<float> values);
    // Appends a band filled with `fill`.
    RasterGrid& add_band(std::string name, float fill);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    std::size_t band_count() const noexcept { return bands_.size(); }

    const GridGeoreference& georef() const noexcept { return georef_; }
    const std::optional<float>& nodata() const noexcept { return nodata_; }
    void set_nodata(std::optional<float> value) { nodata_ = value; }

    const Band& band(std::size_t index) const;
    const Band& band(std::string_view name) const;
    Band& band(std::size_t index);
    std::optional<std::size_t> band_index(std::string_view name) const;
    std::vector<std::string> band_names() const;
    const std::vector<Band>& bands() const noexcept { return bands_; }

    float at(std::size_t band_index, std::size_t row, std::size_t col) const {
        return bands_[band_index].values[row * width_ + col];
    }

    // True when v equals the nodata value (NaN nodata matches NaN).
    bool is_nodata(float v) const noexcept;

    // Free-form key/value pairs carried through the exchange format.
    std::map<std::string, std::string> metadata;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    GridGeoreference georef_;
    std::optional<float> nodata_;
    std::vector<Band> bands_;
};

// Returns the name of the first georeference field (or "width"/"height") on
// which the two grids disagree, or nullopt when they are aligned.
std::optional<std::string> alignment_mismatch(const RasterGrid& a, const RasterGrid& b);

struct NamedGrid {
    std::string name;
    std::reference_wrapper<const RasterGrid> grid;
};

// Throws AlignmentError naming the first grid (and field) that differs from grids[0].
void align_check(std::span<const NamedGrid> grids);
void align_check(std::span<const RasterGrid> grids);

// Nearest-neighbour resampling of every band onto the template's pixel grid.
// Target pixels whose center falls outside the source become nodata.
RasterGrid resample_nearest(const RasterGrid& source, const RasterGrid& target_template);

// Concatenates the bands of aligned grids, prefixing each band name.
RasterGrid stack_bands(std::span<const NamedGrid> grids);

// ---------------------------------------------------------------------------
// Exchange format: a UTF-8 "key: value" header plus a flat payload of
// band-sequential, row-major, little-endian float32 values. The payload lives
// next to the header with the extension replaced by ".bin".

std::filesystem::path payload_path(const std::filesystem::path& header_path);
RasterGrid read_raster(const std::filesystem::path& header_path);
void write_raster(const RasterGrid& grid, const std::filesystem::path& header_path);

}  // namespace kanfire
