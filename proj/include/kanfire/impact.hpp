#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kanfire/burn_mapping.hpp"
#include "kanfire/geometry.hpp"
#include "kanfire/raster.hpp"

namespace kanfire {

inline constexpr const char* kOtherLabel = "Other";
inline constexpr double kDefaultOtherThreshold = 0.3;  // percent

struct ZoneEntry {
    std::int64_t class_code = 0;
    std::string class_label;
    std::size_t pixels = 0;
    double percent = 0.0;  // of burned-and-valid pixels
};

// Entries are ordered by pixel count (descending, ties by code). Classes below
// the threshold, and burned pixels with no class, are pooled into "Other".
struct CategoricalZoneReport {
    std::string fire_name;
    std::vector<ZoneEntry> entries;
    std::size_t other_pixels = 0;
    double other_percent = 0.0;
    std::size_t total_pixels = 0;

    double percent_sum() const;
};

// Counts burned pixels per class code of band 0 of class_grid. Pixels where the
// class grid is nodata are left out of the total. Codes missing from `labels`
// are labelled "class <code>". Throws InvalidArgument when no burned pixel has
// a valid class and AlignmentError when the grids differ.
CategoricalZoneReport zonal_categorical(const BurnMask& mask, const RasterGrid& class_grid,
                                        const std::map<std::int64_t, std::string>& labels,
                                        double other_threshold_percent = kDefaultOtherThreshold);

// Sum of band 0 over burned pixels (nodata counts as 0). Throws on negative values.
double population_exposure(const BurnMask& mask, const RasterGrid& pop_grid);

// Cohort bands are named "<sex>_<start>" with sex in {f, m} and start in
// 0, 1, 5, 10, ..., 80. Cohorts are pooled into three bands along cohort edges.
inline constexpr std::array<int, 18> kCohortStarts{0, 1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80};
inline constexpr std::array<const char*, 3> kAgeBandLabels{"0-19", "20-59", "60+"};

// Index into kAgeBandLabels for a cohort start age.
int age_band_of(int cohort_start);

struct SexExposure {
    double people = 0.0;
    double percent = 0.0;                // of all exposed people
    std::array<double, 3> bands{};       // people per age band
    std::array<double, 3> band_percent{};  // of this sex's total
};

struct ExposureReport {
    std::string fire_name;
    double total_people = 0.0;  // female.people + male.people
    SexExposure female;
    SexExposure male;
    std::array<double, 3> band_percent{};  // both sexes, of total_people
};

ExposureReport demographic_exposure(const BurnMask& mask, const RasterGrid& age_sex);

// Rasterizes the agency polygons onto the mask grid (pixel-center rule, later
// features win) and reports shares of burned pixels per agency. Agency codes
// follow first occurrence in `features`. Burned pixels outside every polygon,
// and agencies literally named "Other", go to the residual.
CategoricalZoneReport jurisdiction_shares(const BurnMask& mask, const std::vector<VectorFeature>& features,
                                          const std::string& agency_attribute,
                                          double other_threshold_percent = kDefaultOtherThreshold);

struct StructureImpactReport {
    std::string fire_name;
    std::size_t damaged_count = 0;
    std::size_t total_in_extent = 0;
};

// A footprint is damaged when a burned pixel center lies inside it or its
// centroid lies in a burned pixel. Footprints not touching the grid are ignored.
StructureImpactReport building_damage(const BurnMask& mask, const std::vector<VectorFeature>& footprints);

// Fine-resolution population in double precision; NaN marks nodata cells.
struct PopulationSurface {
    std::size_t width = 0;
    std::size_t height = 0;
    GridGeoreference georef;
    std::vector<double> values;

    double total() const;  // sum over non-NaN cells
    RasterGrid to_raster(const std::string& band_name = "population") const;
};

// Spreads every coarse cell evenly over its settled fine cells, or over all of
// its fine cells when none is settled. Both grids must share an origin and the
// fine grid must tile each coarse cell with an integer block.
PopulationSurface dasymetric_refine(const RasterGrid& coarse_pop, const RasterGrid& settlement_classes,
                                    const std::set<std::int64_t>& settled_codes);

enum class FocalStat { sum, mean };

// Per-band (2r+1)^2 window statistic; nodata cells are skipped and windows are
// clipped at the grid edge. Cells whose window holds no data become nodata.
RasterGrid focal_stat(const RasterGrid& grid, int radius, FocalStat stat, int threads = 1);

}  // namespace kanfire
