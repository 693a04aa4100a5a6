#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kanfire/cheby_kan.hpp"
#include "kanfire/geometry.hpp"
#include "kanfire/raster.hpp"

namespace kanfire {

inline constexpr float kMaskUnburned = 0.0f;
inline constexpr float kMaskBurned = 1.0f;
inline constexpr float kMaskNodata = 255.0f;
inline constexpr const char* kMaskBandName = "burn_mask";

struct MaskProvenance {
    std::string model_id;
    std::string decision_rule;
    std::string postprocess;
};

// Single-band grid holding 0 (unburned), 1 (burned) or kMaskNodata.
struct BurnMask {
    RasterGrid grid;
    MaskProvenance provenance;

    // Wraps a grid (first band) after checking the value invariant; reads
    // provenance from the grid metadata when present.
    static BurnMask from_grid(RasterGrid grid);
    // Blank (all-unburned) mask on the given georeference.
    static BurnMask blank(std::size_t width, std::size_t height, const GridGeoreference& georef);

    // Grid with provenance copied into metadata, ready for write_raster.
    RasterGrid to_grid() const;

    std::size_t width() const { return grid.width(); }
    std::size_t height() const { return grid.height(); }
    const std::vector<float>& values() const { return grid.band(0).values; }
    std::vector<float>& values() { return grid.band(0).values; }
    bool burned(std::size_t index) const { return values()[index] == kMaskBurned; }
    bool is_nodata(std::size_t index) const { return values()[index] == kMaskNodata; }
    std::size_t burned_pixels() const;

    void validate() const;
};

struct PredictOptions {
    int threads = 1;
    std::size_t tile_rows = 256;
    std::size_t tile_cols = 0;  // 0 = full width
};

// Per-pixel argmax of infer-mode logits (ties -> unburned). Pixels with any
// nodata band become nodata. Output is independent of tiling and threads.
BurnMask predict_mask(const ChebyKanModel& model, const RasterGrid& stack, const PredictOptions& options = {});

// ---------------------------------------------------------------------------
// Morphology

enum class StructuringElement { square3, cross3 };
enum class MorphOp { open, close };

struct PostprocessParams {
    StructuringElement element = StructuringElement::square3;
    std::vector<MorphOp> operations{MorphOp::open, MorphOp::close};
    std::size_t min_component_pixels = 10;
    int connectivity = 8;

    std::string describe() const;
    void validate() const;
};

// How out-of-grid cells enter an erosion: as unburned, or not at all.
enum class ErosionBorder { unburned, ignore };

using BinaryImage = std::vector<std::uint8_t>;  // row-major 0/1

BinaryImage erode(const BinaryImage& image, std::size_t width, std::size_t height, StructuringElement element,
                  ErosionBorder border = ErosionBorder::unburned);
// Out-of-grid cells never contribute to a dilation.
BinaryImage dilate(const BinaryImage& image, std::size_t width, std::size_t height, StructuringElement element);

// Erosion (out-of-grid = unburned) then dilation: removes specks, never adds pixels.
BinaryImage opening(const BinaryImage& image, std::size_t width, std::size_t height, StructuringElement element);
// Dilation then erosion over in-grid neighbours only: fills pits, never removes pixels.
BinaryImage closing(const BinaryImage& image, std::size_t width, std::size_t height, StructuringElement element);

// Applies the operation sequence, then drops components smaller than
// min_component_pixels. Nodata is treated as unburned and restored afterwards.
BurnMask morphology(const BurnMask& mask, const PostprocessParams& params);

struct ComponentLabels {
    std::vector<int> labels;          // 0 = background, 1.. in first-scan order
    std::vector<std::size_t> sizes;   // sizes[k - 1] is the pixel count of label k

    std::size_t count() const noexcept { return sizes.size(); }
};

ComponentLabels connected_components(const BinaryImage& image, std::size_t width, std::size_t height,
                                     int connectivity);
ComponentLabels connected_components(const BurnMask& mask, int connectivity);

BinaryImage burned_image(const BurnMask& mask);

// ---------------------------------------------------------------------------
// Areas and per-fire attribution

struct AreaSummary {
    std::string fire_name;
    std::size_t burned_pixels = 0;
    double burned_hectares = 0.0;
    std::size_t component_count = 0;
    double pixel_area_m2 = 0.0;
};

// pixels * pixel_size_x * |pixel_size_y| / 10,000
double pixels_to_hectares(std::size_t pixels, const GridGeoreference& georef);

AreaSummary area_summary(const BurnMask& mask, const std::string& fire_name, int connectivity = 8);

struct FireHint {
    std::string name;
    BoundingBox bbox;  // map units
};

inline constexpr const char* kUnattributed = "unattributed";

struct FireMask {
    std::string name;
    BurnMask mask;
};

// Assigns every burned component to the first hint whose box contains the
// component centroid. Returns one mask per hint (in hint order), followed by
// an "unattributed" mask when any burned pixels were left over.
std::vector<FireMask> split_by_fire(const BurnMask& mask, std::span<const FireHint> hints, int connectivity = 8);

}  // namespace kanfire
