#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "kanfire/burn_mapping.hpp"
#include "kanfire/impact.hpp"
#include "kanfire/training.hpp"

namespace kanfire {

using Json = nlohmann::ordered_json;

// Everything the assessment stage learns about one fire.
struct FireAssessment {
    std::string fire_name;
    AreaSummary area;
    std::optional<CategoricalZoneReport> landcover;
    std::optional<CategoricalZoneReport> jurisdiction;
    std::optional<double> population;
    std::string population_source;  // "raw" or "dasymetric"
    std::optional<ExposureReport> demographics;
    std::optional<StructureImpactReport> structures;
};

Json to_json(const MetricsReport& m);
Json to_json(const AreaSummary& a);
Json to_json(const CategoricalZoneReport& r);
Json to_json(const ExposureReport& r);
Json to_json(const StructureImpactReport& r);
Json to_json(const FireAssessment& a);

MetricsReport metrics_from_json(const Json& j);
AreaSummary area_from_json(const Json& j);
CategoricalZoneReport zone_report_from_json(const Json& j);
ExposureReport exposure_from_json(const Json& j);
StructureImpactReport structures_from_json(const Json& j);
FireAssessment assessment_from_json(const Json& j);

// One decimal, halves rounded away from zero.
double round_percent(double percent);
std::string format_percent(double percent);
// Integer part grouped with commas: 17042.85 -> "17,042.85" (decimals fixed).
std::string format_grouped(double value, int decimals);

// Sum over fires; pixel counts are summed first when all fires share a pixel area.
double total_hectares(std::span<const AreaSummary> areas);

// Comma-separated tables with a header row, one row per fire and class/band.
std::string areas_csv(std::span<const AreaSummary> areas);
std::string landcover_csv(std::span<const FireAssessment> fires);
std::string jurisdiction_csv(std::span<const FireAssessment> fires);
std::string demographics_csv(std::span<const FireAssessment> fires);
std::string structures_csv(std::span<const FireAssessment> fires);
std::string population_csv(std::span<const FireAssessment> fires);

// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(const std::string& value);

struct ReportInputs {
    std::optional<MetricsReport> metrics;
    std::vector<FireAssessment> fires;  // in presentation order
};

// Markdown document with sections for areas, accuracy, land cover,
// structures, jurisdictions and demographics. Sections without data are
// omitted. Output depends only on the inputs.
std::string render_report(const ReportInputs& inputs);

}  // namespace kanfire
