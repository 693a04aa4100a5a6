#pragma once

// Reference per-fire figures for the four 2025 Los Angeles fires, expressed as
// the pixel and people counts that reproduce them.

#include <string>
#include <vector>

#include "kanfire/burn_mapping.hpp"
#include "kanfire/report.hpp"

namespace fixtures {

struct FireFigures {
    const char* name;
    std::size_t burned_pixels;  // at 10 m
    std::size_t structures;
    double exposed_people;
};

inline const std::vector<FireFigures>& fires() {
    static const std::vector<FireFigures> v{
        {"Hurst", 31536, 17, 148},
        {"Eaton", 532577, 9869, 20193},
        {"Kenneth", 44074, 24, 489},
        {"Palisades", 1096098, 8436, 20870},
    };
    return v;
}

inline kanfire::AreaSummary area(const FireFigures& f) {
    kanfire::AreaSummary a;
    a.fire_name = f.name;
    a.burned_pixels = f.burned_pixels;
    a.pixel_area_m2 = 100.0;
    kanfire::GridGeoreference g;
    g.pixel_size_x = 10.0;
    g.pixel_size_y = -10.0;
    a.burned_hectares = kanfire::pixels_to_hectares(f.burned_pixels, g);
    a.component_count = 1;
    return a;
}

inline kanfire::CategoricalZoneReport zone(const std::string& fire,
                                           const std::vector<std::pair<std::string, std::size_t>>& classes,
                                           std::size_t other) {
    kanfire::CategoricalZoneReport r;
    r.fire_name = fire;
    std::size_t total = other;
    for (const auto& c : classes) total += c.second;
    std::int64_t code = 1;
    for (const auto& [label, n] : classes) {
        r.entries.push_back({code++, label, n, 100.0 * static_cast<double>(n) / static_cast<double>(total)});
    }
    r.other_pixels = other;
    r.other_percent = 100.0 * static_cast<double>(other) / static_cast<double>(total);
    r.total_pixels = total;
    return r;
}

// USFS 57.1, Other 30.0, City 9.7, CNTY 1.9, REG 1.0, NGO 0.4
inline kanfire::CategoricalZoneReport eaton_jurisdiction() {
    return zone("Eaton", {{"USFS", 5708}, {"City", 968}, {"CNTY", 188}, {"REG", 98}, {"NGO", 40}}, 2998);
}

// Shrubland 75.8, developed 15.6
inline kanfire::CategoricalZoneReport palisades_landcover() {
    return zone("Palisades", {{"Shrubland", 758}, {"Developed", 156}, {"Forest", 52}, {"Grassland", 31}}, 3);
}

inline kanfire::ExposureReport palisades_demographics() {
    kanfire::ExposureReport r;
    r.fire_name = "Palisades";
    r.female.bands = {2640, 5727, 2256};  // 24.9 / 53.9 / 21.2 of 10,623
    r.male.bands = {2761, 5697, 1789};    // 26.9 / 55.6 / 17.5 of 10,247
    for (auto* s : {&r.female, &r.male}) {
        s->people = s->bands[0] + s->bands[1] + s->bands[2];
        for (std::size_t b = 0; b < 3; ++b) s->band_percent[b] = 100.0 * s->bands[b] / s->people;
    }
    r.total_people = r.female.people + r.male.people;  // 20,870
    r.female.percent = 100.0 * r.female.people / r.total_people;
    r.male.percent = 100.0 * r.male.people / r.total_people;
    for (std::size_t b = 0; b < 3; ++b) {
        r.band_percent[b] = 100.0 * (r.female.bands[b] + r.male.bands[b]) / r.total_people;
    }
    return r;
}

inline kanfire::ReportInputs inputs() {
    kanfire::ReportInputs in;
    kanfire::ConfusionMatrix cm;
    cm.counts = {{{6322, 66}, {66, 3546}}};  // 0.9868 / 0.9714 / 0.9817
    in.metrics = kanfire::MetricsReport::from(cm);
    for (const auto& f : fires()) {
        kanfire::FireAssessment a;
        a.fire_name = f.name;
        a.area = area(f);
        a.structures = kanfire::StructureImpactReport{f.name, f.structures, f.structures};
        a.population = f.exposed_people;
        a.population_source = "raw";
        if (std::string(f.name) == "Eaton") a.jurisdiction = eaton_jurisdiction();
        if (std::string(f.name) == "Palisades") {
            a.landcover = palisades_landcover();
            a.demographics = palisades_demographics();
        }
        in.fires.push_back(std::move(a));
    }
    return in;
}

}  // namespace fixtures
