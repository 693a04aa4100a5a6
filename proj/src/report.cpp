#include "kanfire/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "kanfire/error.hpp"

namespace kanfire {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

// Full-precision number for tabular files: shortest form that round-trips.
std::string number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

Json band_array(const std::array<double, 3>& values) {
    Json out = Json::array();
    for (double v : values) out.push_back(v);
    return out;
}

std::array<double, 3> band_values(const Json& j) {
    std::array<double, 3> out{};
    if (!j.is_array() || j.size() != 3) throw FormatError("expected three age-band values");
    for (std::size_t i = 0; i < 3; ++i) out[i] = j.at(i).get<double>();
    return out;
}

Json sex_json(const SexExposure& s) {
    Json j;
    j["people"] = s.people;
    j["percent"] = s.percent;
    j["bands"] = band_array(s.bands);
    j["band_percent"] = band_array(s.band_percent);
    return j;
}

SexExposure sex_from_json(const Json& j) {
    SexExposure s;
    s.people = j.at("people").get<double>();
    s.percent = j.at("percent").get<double>();
    s.bands = band_values(j.at("bands"));
    s.band_percent = band_values(j.at("band_percent"));
    return s;
}

std::string table_row(std::initializer_list<std::string> cells) {
    std::string row = "|";
    for (const auto& c : cells) row += " " + c + " |";
    return row + "\n";
}

void zone_section(std::ostringstream& out, const std::vector<FireAssessment>& fires,
                  const std::optional<CategoricalZoneReport> FireAssessment::*member, const char* title,
                  const char* class_header) {
    bool any = false;
    for (const auto& f : fires) any = any || (f.*member).has_value();
    if (!any) return;
    out << "## " << title << "\n\n";
    for (const auto& f : fires) {
        const auto& r = f.*member;
        if (!r) continue;
        out << "### " << f.fire_name << "\n\n";
        out << table_row({class_header, "Pixels", "Share (%)"});
        out << "|---|---:|---:|\n";
        for (const auto& e : r->entries) {
            out << table_row({e.class_label, std::to_string(e.pixels), format_percent(e.percent)});
        }
        if (r->other_pixels > 0) {
            out << table_row({kOtherLabel, std::to_string(r->other_pixels), format_percent(r->other_percent)});
        }
        out << "\n";
    }
}

}  // namespace

Json to_json(const MetricsReport& m) {
    Json j;
    j["overall_accuracy"] = m.overall_accuracy;
    j["kappa"] = m.kappa;
    j["f1_burned"] = m.f1_burned;
    const auto& c = m.confusion_matrix.counts;
    j["confusion_matrix"] = Json::array({Json::array({c[0][0], c[0][1]}), Json::array({c[1][0], c[1][1]})});
    return j;
}

MetricsReport metrics_from_json(const Json& j) {
    MetricsReport m;
    m.overall_accuracy = j.at("overall_accuracy").get<double>();
    m.kappa = j.at("kappa").get<double>();
    m.f1_burned = j.at("f1_burned").get<double>();
    const auto& cm = j.at("confusion_matrix");
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) m.confusion_matrix.counts[r][c] = cm.at(r).at(c).get<std::int64_t>();
    }
    return m;
}

Json to_json(const AreaSummary& a) {
    Json j;
    j["fire"] = a.fire_name;
    j["burned_pixels"] = a.burned_pixels;
    j["burned_hectares"] = a.burned_hectares;
    j["component_count"] = a.component_count;
    j["pixel_area_m2"] = a.pixel_area_m2;
    return j;
}

AreaSummary area_from_json(const Json& j) {
    AreaSummary a;
    a.fire_name = j.at("fire").get<std::string>();
    a.burned_pixels = j.at("burned_pixels").get<std::size_t>();
    a.burned_hectares = j.at("burned_hectares").get<double>();
    a.component_count = j.at("component_count").get<std::size_t>();
    a.pixel_area_m2 = j.at("pixel_area_m2").get<double>();
    return a;
}

Json to_json(const CategoricalZoneReport& r) {
    Json j;
    j["fire"] = r.fire_name;
    j["total_pixels"] = r.total_pixels;
    Json entries = Json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"code", e.class_code}, {"label", e.class_label}, {"pixels", e.pixels},
                           {"percent", e.percent}});
    }
    j["entries"] = std::move(entries);
    j["other_pixels"] = r.other_pixels;
    j["other_percent"] = r.other_percent;
    return j;
}

CategoricalZoneReport zone_report_from_json(const Json& j) {
    CategoricalZoneReport r;
    r.fire_name = j.at("fire").get<std::string>();
    r.total_pixels = j.at("total_pixels").get<std::size_t>();
    for (const auto& e : j.at("entries")) {
        r.entries.push_back({e.at("code").get<std::int64_t>(), e.at("label").get<std::string>(),
                             e.at("pixels").get<std::size_t>(), e.at("percent").get<double>()});
    }
    r.other_pixels = j.at("other_pixels").get<std::size_t>();
    r.other_percent = j.at("other_percent").get<double>();
    return r;
}

Json to_json(const ExposureReport& r) {
    Json j;
    j["fire"] = r.fire_name;
    j["total_people"] = r.total_people;
    Json labels = Json::array();
    for (const char* l : kAgeBandLabels) labels.push_back(l);
    j["age_bands"] = std::move(labels);
    j["female"] = sex_json(r.female);
    j["male"] = sex_json(r.male);
    j["band_percent"] = band_array(r.band_percent);
    return j;
}

ExposureReport exposure_from_json(const Json& j) {
    ExposureReport r;
    r.fire_name = j.at("fire").get<std::string>();
    r.total_people = j.at("total_people").get<double>();
    r.female = sex_from_json(j.at("female"));
    r.male = sex_from_json(j.at("male"));
    r.band_percent = band_values(j.at("band_percent"));
    return r;
}

Json to_json(const StructureImpactReport& r) {
    Json j;
    j["fire"] = r.fire_name;
    j["damaged"] = r.damaged_count;
    j["total_in_extent"] = r.total_in_extent;
    return j;
}

StructureImpactReport structures_from_json(const Json& j) {
    StructureImpactReport r;
    r.fire_name = j.at("fire").get<std::string>();
    r.damaged_count = j.at("damaged").get<std::size_t>();
    r.total_in_extent = j.at("total_in_extent").get<std::size_t>();
    return r;
}

Json to_json(const FireAssessment& a) {
    Json j;
    j["fire"] = a.fire_name;
    j["area"] = to_json(a.area);
    if (a.landcover) j["landcover"] = to_json(*a.landcover);
    if (a.jurisdiction) j["jurisdiction"] = to_json(*a.jurisdiction);
    if (a.population) {
        j["population"] = {{"total_people", *a.population}, {"source", a.population_source}};
    }
    if (a.demographics) j["demographics"] = to_json(*a.demographics);
    if (a.structures) j["structures"] = to_json(*a.structures);
    return j;
}

FireAssessment assessment_from_json(const Json& j) {
    FireAssessment a;
    a.fire_name = j.at("fire").get<std::string>();
    a.area = area_from_json(j.at("area"));
    if (j.contains("landcover")) a.landcover = zone_report_from_json(j["landcover"]);
    if (j.contains("jurisdiction")) a.jurisdiction = zone_report_from_json(j["jurisdiction"]);
    if (j.contains("population")) {
        a.population = j["population"].at("total_people").get<double>();
        a.population_source = j["population"].at("source").get<std::string>();
    }
    if (j.contains("demographics")) a.demographics = exposure_from_json(j["demographics"]);
    if (j.contains("structures")) a.structures = structures_from_json(j["structures"]);
    return a;
}

double round_percent(double percent) { return std::round(percent * 10.0) / 10.0; }

std::string format_percent(double percent) {
    const double r = round_percent(percent);
    return fixed(r == 0.0 ? 0.0 : r, 1);  // no "-0.0"
}

std::string format_grouped(double value, int decimals) {
    std::string s = fixed(value, decimals);
    const bool negative = !s.empty() && s[0] == '-';
    const std::size_t begin = negative ? 1 : 0;
    std::size_t int_end = s.find('.');
    if (int_end == std::string::npos) int_end = s.size();
    for (std::size_t pos = int_end; pos > begin + 3; pos -= 3) s.insert(pos - 3, ",");
    return s;
}

double total_hectares(std::span<const AreaSummary> areas) {
    if (areas.empty()) return 0.0;
    bool uniform = true;
    std::size_t pixels = 0;
    double sum = 0.0;
    for (const auto& a : areas) {
        uniform = uniform && a.pixel_area_m2 == areas.front().pixel_area_m2;
        pixels += a.burned_pixels;
        sum += a.burned_hectares;
    }
    return uniform ? static_cast<double>(pixels) * areas.front().pixel_area_m2 / 10000.0 : sum;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string areas_csv(std::span<const AreaSummary> areas) {
    std::string out = "fire,burned_pixels,burned_hectares,component_count\n";
    for (const auto& a : areas) {
        out += csv_field(a.fire_name) + "," + std::to_string(a.burned_pixels) + "," + fixed(a.burned_hectares, 2) +
               "," + std::to_string(a.component_count) + "\n";
    }
    return out;
}

namespace {

std::string zone_csv(std::span<const FireAssessment> fires,
                     const std::optional<CategoricalZoneReport> FireAssessment::*member, const char* header) {
    std::string out = header;
    for (const auto& f : fires) {
        const auto& r = f.*member;
        if (!r) continue;
        const auto name = csv_field(f.fire_name);
        for (const auto& e : r->entries) {
            out += name + "," + std::to_string(e.class_code) + "," + csv_field(e.class_label) + "," +
                   std::to_string(e.pixels) + "," + number(e.percent) + "\n";
        }
        if (r->other_pixels > 0) {
            out += name + ",," + kOtherLabel + "," + std::to_string(r->other_pixels) + "," + number(r->other_percent) +
                   "\n";
        }
    }
    return out;
}

}  // namespace

std::string landcover_csv(std::span<const FireAssessment> fires) {
    return zone_csv(fires, &FireAssessment::landcover, "fire,class_code,class_label,pixels,percent\n");
}

std::string jurisdiction_csv(std::span<const FireAssessment> fires) {
    return zone_csv(fires, &FireAssessment::jurisdiction, "fire,agency_code,agency,pixels,percent\n");
}

std::string demographics_csv(std::span<const FireAssessment> fires) {
    std::string out = "fire,sex,age_band,people,percent\n";
    for (const auto& f : fires) {
        if (!f.demographics) continue;
        const auto name = csv_field(f.fire_name);
        for (const auto& [sex, s] : {std::pair{"female", &f.demographics->female}, std::pair{"male", &f.demographics->male}}) {
            for (std::size_t b = 0; b < 3; ++b) {
                out += name + "," + sex + "," + kAgeBandLabels[b] + "," + number(s->bands[b]) + "," +
                       number(s->band_percent[b]) + "\n";
            }
        }
    }
    return out;
}

std::string structures_csv(std::span<const FireAssessment> fires) {
    std::string out = "fire,damaged,total_in_extent\n";
    for (const auto& f : fires) {
        if (!f.structures) continue;
        out += csv_field(f.fire_name) + "," + std::to_string(f.structures->damaged_count) + "," +
               std::to_string(f.structures->total_in_extent) + "\n";
    }
    return out;
}

std::string population_csv(std::span<const FireAssessment> fires) {
    std::string out = "fire,total_people,source\n";
    for (const auto& f : fires) {
        if (!f.population) continue;
        out += csv_field(f.fire_name) + "," + number(*f.population) + "," + f.population_source + "\n";
    }
    return out;
}

std::string render_report(const ReportInputs& inputs) {
    std::ostringstream out;
    out << "# Wildfire impact report\n\n";

    if (!inputs.fires.empty()) {
        std::vector<AreaSummary> areas;
        out << "## Burned area\n\n";
        out << table_row({"Fire", "Burned pixels", "Burned area (ha)", "Components"});
        out << "|---|---:|---:|---:|\n";
        for (const auto& f : inputs.fires) {
            areas.push_back(f.area);
            out << table_row({f.fire_name, format_grouped(static_cast<double>(f.area.burned_pixels), 0),
                              format_grouped(f.area.burned_hectares, 2), std::to_string(f.area.component_count)});
        }
        out << "\nTotal burned area: " << format_grouped(total_hectares(areas), 2) << " ha\n\n";
    }

    if (inputs.metrics) {
        const auto& m = *inputs.metrics;
        const auto& c = m.confusion_matrix.counts;
        out << "## Classification accuracy\n\n";
        out << table_row({"Metric", "Value"});
        out << "|---|---:|\n";
        out << table_row({"Overall accuracy", fixed(m.overall_accuracy, 4)});
        out << table_row({"Kappa", fixed(m.kappa, 4)});
        out << table_row({"F1 (burned)", fixed(m.f1_burned, 4)});
        out << "\nConfusion matrix (rows: reference, columns: predicted; 0 = unburned, 1 = burned): "
            << "[[" << c[0][0] << ", " << c[0][1] << "], [" << c[1][0] << ", " << c[1][1] << "]]\n\n";
    }

    zone_section(out, inputs.fires, &FireAssessment::landcover, "Land cover", "Class");

    bool any_structures = false;
    for (const auto& f : inputs.fires) any_structures = any_structures || f.structures.has_value();
    if (any_structures) {
        out << "## Structures\n\n";
        out << table_row({"Fire", "Number of Structures Damaged or Destroyed"});
        out << "|---|---:|\n";
        for (const auto& f : inputs.fires) {
            if (f.structures) out << table_row({f.fire_name, std::to_string(f.structures->damaged_count)});
        }
        out << "\n";
    }

    zone_section(out, inputs.fires, &FireAssessment::jurisdiction, "Jurisdictions", "Agency");

    bool any_people = false;
    for (const auto& f : inputs.fires) any_people = any_people || f.population || f.demographics;
    if (any_people) {
        out << "## Population and demographics\n\n";
        out << table_row({"Fire", "Exposed population", "Source", "Female (%)", "Male (%)"});
        out << "|---|---:|---|---:|---:|\n";
        for (const auto& f : inputs.fires) {
            if (!f.population && !f.demographics) continue;
            const double people = f.population ? *f.population : f.demographics->total_people;
            const std::string source = f.population ? f.population_source : "age/sex cohorts";
            out << table_row({f.fire_name, format_grouped(people, 0), source,
                              f.demographics ? format_percent(f.demographics->female.percent) : "-",
                              f.demographics ? format_percent(f.demographics->male.percent) : "-"});
        }
        out << "\n";

        bool any_demo = false;
        for (const auto& f : inputs.fires) any_demo = any_demo || f.demographics.has_value();
        if (any_demo) {
            out << table_row({"Fire", "Sex", std::string(kAgeBandLabels[0]) + " (%)",
                              std::string(kAgeBandLabels[1]) + " (%)", std::string(kAgeBandLabels[2]) + " (%)"});
            out << "|---|---|---:|---:|---:|\n";
            for (const auto& f : inputs.fires) {
                if (!f.demographics) continue;
                const auto& d = *f.demographics;
                for (const auto& [sex, s] : {std::pair{"Female", &d.female}, std::pair{"Male", &d.male}}) {
                    out << table_row({f.fire_name, sex, format_percent(s->band_percent[0]),
                                      format_percent(s->band_percent[1]), format_percent(s->band_percent[2])});
                }
            }
            out << "\nAge bands follow 5-year cohort boundaries (0-19, 20-59, 60+); percentages are shares of "
                   "each sex's exposed population.\n\n";
        }
    }

    std::string text = out.str();
    while (text.size() >= 2 && text[text.size() - 1] == '\n' && text[text.size() - 2] == '\n') text.pop_back();
    return text;
}

}  // namespace kanfire
