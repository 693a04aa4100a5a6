#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kanfire/burn_mapping.hpp"
#include "kanfire/geometry.hpp"
#include "kanfire/report.hpp"
#include "kanfire/training.hpp"

namespace kanfire {

enum class FeatureMode { pre_post, post_only };

struct DasymetricConfig {
    std::filesystem::path settlement;
    std::set<std::int64_t> settled_codes;
};

// Parsed pipeline configuration. Relative paths are resolved against the
// directory holding the config file.
struct PipelineConfig {
    std::optional<std::filesystem::path> pre_stack;
    std::filesystem::path post_stack;
    FeatureMode features = FeatureMode::pre_post;
    std::optional<std::filesystem::path> labels;

    std::optional<std::filesystem::path> landcover;
    std::map<std::int64_t, std::string> landcover_legend;
    std::optional<std::filesystem::path> population;
    std::optional<DasymetricConfig> dasymetric;
    std::optional<std::filesystem::path> age_sex;
    std::optional<std::filesystem::path> jurisdictions;
    std::string jurisdiction_attribute = "agency";
    std::optional<std::filesystem::path> footprints;

    std::vector<FireHint> fires;
    std::string study_area_name = "study_area";  // used when no fire hints are given

    std::size_t samples_per_class = 5000;
    double train_fraction = 0.8;
    TrainConfig training;
    PostprocessParams postprocess;
    double landcover_other_threshold = 0.3;
    double jurisdiction_other_threshold = 0.3;

    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "out";
    int threads = 1;
    std::size_t tile_rows = 256;

    // Every referenced path exists, fire names are unique, numbers in range.
    void validate() const;
};

// Parses JSON text; unknown keys are rejected. Paths are resolved against base_dir.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
// Reads, parses and validates a config file.
PipelineConfig load_config(const std::filesystem::path& path);

// Output file names inside output_dir.
inline constexpr const char* kModelFile = "model.ckan";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kTrainingLogFile = "training_log.csv";
inline constexpr const char* kMaskFile = "mask.hdr";
inline constexpr const char* kAreasFile = "areas.csv";
inline constexpr const char* kReportsDir = "reports";
inline constexpr const char* kReportIndexFile = "index.json";
inline constexpr const char* kReportFile = "report.md";

// File-system-safe stem for a fire name.
std::string file_stem(const std::string& name);

// Builds the classifier input stack ("pre:<band>", "post:<band>") for the config.
RasterGrid load_feature_stack(const PipelineConfig& config);

// sample -> split -> train -> evaluate; writes model, metrics and training log.
MetricsReport cmd_train(const PipelineConfig& config);

// Predicts and cleans the mask, writes it plus per-fire masks and areas.csv.
std::vector<AreaSummary> cmd_predict(const PipelineConfig& config, const std::optional<std::filesystem::path>& model);

// Overlays the mask on every configured layer and writes per-fire reports.
std::vector<FireAssessment> cmd_assess(const PipelineConfig& config, const std::optional<std::filesystem::path>& mask);

// Combines metrics and per-fire reports from a directory into one document.
// Returns the path written.
std::filesystem::path cmd_report(const std::filesystem::path& reports_dir,
                                 const std::optional<std::filesystem::path>& metrics,
                                 const std::filesystem::path& output);

}  // namespace kanfire
