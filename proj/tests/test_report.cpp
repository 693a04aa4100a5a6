#include <sstream>

#include "doctest.h"
#include "kanfire/report.hpp"
#include "report_fixtures.hpp"

using namespace kanfire;

namespace {

bool contains(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

}  // namespace

TEST_CASE("percent rounding keeps one decimal and rounds halves away from zero") {
    CHECK(format_percent(57.08) == "57.1");
    CHECK(format_percent(29.98) == "30.0");
    CHECK(format_percent(0.4) == "0.4");
    CHECK(format_percent(100.0) == "100.0");
    CHECK(format_percent(0.25) == "0.3");
    CHECK(format_percent(-0.01) == "0.0");
    CHECK(round_percent(12.25) == doctest::Approx(12.3));
    CHECK(round_percent(-12.25) == doctest::Approx(-12.3));
}

TEST_CASE("grouped number formatting") {
    CHECK(format_grouped(17042.85, 2) == "17,042.85");
    CHECK(format_grouped(315.36, 2) == "315.36");
    CHECK(format_grouped(1096098, 0) == "1,096,098");
    CHECK(format_grouped(999, 0) == "999");
    CHECK(format_grouped(1000, 0) == "1,000");
    CHECK(format_grouped(0, 2) == "0.00");
    CHECK(format_grouped(999.996, 2) == "1,000.00");
    CHECK(format_grouped(-1234.5, 1) == "-1,234.5");
}

TEST_CASE("total burned area over the four fires") {
    std::vector<AreaSummary> areas;
    for (const auto& f : fixtures::fires()) areas.push_back(fixtures::area(f));
    CHECK(format_grouped(areas[0].burned_hectares, 2) == "315.36");
    CHECK(format_grouped(areas[1].burned_hectares, 2) == "5,325.77");
    CHECK(format_grouped(areas[2].burned_hectares, 2) == "440.74");
    CHECK(format_grouped(areas[3].burned_hectares, 2) == "10,960.98");
    CHECK(format_grouped(total_hectares(areas), 2) == "17,042.85");
    CHECK(total_hectares({}) == 0.0);
}

TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("json round trips") {
    const auto in = fixtures::inputs();
    SUBCASE("metrics") {
        const auto back = metrics_from_json(to_json(*in.metrics));
        CHECK(back.overall_accuracy == in.metrics->overall_accuracy);
        CHECK(back.kappa == in.metrics->kappa);
        CHECK(back.f1_burned == in.metrics->f1_burned);
        CHECK(back.confusion_matrix.counts == in.metrics->confusion_matrix.counts);
        CHECK(to_json(*in.metrics)["confusion_matrix"].dump() == "[[6322,66],[66,3546]]");
    }
    SUBCASE("whole assessments") {
        for (const auto& a : in.fires) {
            const Json j = to_json(a);
            const auto back = assessment_from_json(Json::parse(j.dump()));
            CHECK(to_json(back).dump() == j.dump());
            CHECK(back.area.burned_hectares == a.area.burned_hectares);
            CHECK(back.landcover.has_value() == a.landcover.has_value());
            CHECK(back.demographics.has_value() == a.demographics.has_value());
        }
    }
    SUBCASE("exposure values survive exactly") {
        const auto d = fixtures::palisades_demographics();
        const auto back = exposure_from_json(to_json(d));
        CHECK(back.total_people == d.total_people);
        CHECK(back.female.bands == d.female.bands);
        CHECK(back.male.band_percent == d.male.band_percent);
    }
    SUBCASE("missing keys are reported") {
        CHECK_THROWS(area_from_json(Json::parse(R"({"fire":"x"})")));
    }
}

TEST_CASE("csv tables") {
    const auto in = fixtures::inputs();
    std::vector<AreaSummary> areas;
    for (const auto& f : in.fires) areas.push_back(f.area);

    const auto a = areas_csv(areas);
    CHECK(first_line(a) == "fire,burned_pixels,burned_hectares,component_count");
    CHECK(contains(a, "Hurst,31536,315.36,1\n"));
    CHECK(contains(a, "Palisades,1096098,10960.98,1\n"));

    const auto j = jurisdiction_csv(in.fires);
    CHECK(first_line(j) == "fire,agency_code,agency,pixels,percent");
    CHECK(contains(j, "Eaton,1,USFS,5708,"));
    CHECK(contains(j, "Eaton,,Other,2998,"));
    // Percent fields round-trip to the stored doubles.
    std::istringstream rows(j);
    std::string row;
    std::getline(rows, row);
    const auto& entries = in.fires[1].jurisdiction->entries;
    for (const auto& e : entries) {
        std::getline(rows, row);
        CHECK(std::stod(row.substr(row.rfind(',') + 1)) == e.percent);
    }

    const auto l = landcover_csv(in.fires);
    CHECK(first_line(l) == "fire,class_code,class_label,pixels,percent");
    CHECK(contains(l, "Palisades,1,Shrubland,758,"));

    const auto s = structures_csv(in.fires);
    CHECK(first_line(s) == "fire,damaged,total_in_extent");
    CHECK(contains(s, "Eaton,9869,9869\n"));

    const auto p = population_csv(in.fires);
    CHECK(first_line(p) == "fire,total_people,source");
    CHECK(contains(p, "Palisades,20870,raw\n"));

    const auto d = demographics_csv(in.fires);
    CHECK(first_line(d) == "fire,sex,age_band,people,percent");
    CHECK(contains(d, "Palisades,female,20-59,5727,"));
    CHECK(contains(d, "Palisades,male,60+,1789,"));
}

TEST_CASE("rendered report reproduces the per-fire tables") {
    const auto text = render_report(fixtures::inputs());
    CHECK(first_line(text) == "# Wildfire impact report");

    SUBCASE("burned area") {
        CHECK(contains(text, "| Hurst | 31,536 | 315.36 | 1 |"));
        CHECK(contains(text, "| Eaton | 532,577 | 5,325.77 | 1 |"));
        CHECK(contains(text, "| Kenneth | 44,074 | 440.74 | 1 |"));
        CHECK(contains(text, "| Palisades | 1,096,098 | 10,960.98 | 1 |"));
        CHECK(contains(text, "Total burned area: 17,042.85 ha"));
    }
    SUBCASE("accuracy") {
        CHECK(contains(text, "| Overall accuracy | 0.9868 |"));
        CHECK(contains(text, "| Kappa | 0.9714 |"));
        CHECK(contains(text, "| F1 (burned) | 0.9817 |"));
        CHECK(contains(text, "[[6322, 66], [66, 3546]]"));
    }
    SUBCASE("structures") {
        CHECK(contains(text, "| Fire | Number of Structures Damaged or Destroyed |"));
        CHECK(contains(text, "| Eaton | 9869 |"));
        CHECK(contains(text, "| Palisades | 8436 |"));
        CHECK(contains(text, "| Hurst | 17 |"));
        CHECK(contains(text, "| Kenneth | 24 |"));
    }
    SUBCASE("jurisdictions") {
        CHECK(contains(text, "## Jurisdictions"));
        CHECK(contains(text, "| USFS | 5708 | 57.1 |"));
        CHECK(contains(text, "| Other | 2998 | 30.0 |"));
        CHECK(contains(text, "| City | 968 | 9.7 |"));
        CHECK(contains(text, "| CNTY | 188 | 1.9 |"));
        CHECK(contains(text, "| REG | 98 | 1.0 |"));
        CHECK(contains(text, "| NGO | 40 | 0.4 |"));
    }
    SUBCASE("land cover") {
        CHECK(contains(text, "| Shrubland | 758 | 75.8 |"));
        CHECK(contains(text, "| Developed | 156 | 15.6 |"));
    }
    SUBCASE("population") {
        CHECK(contains(text, "| Palisades | 20,870 | raw | 50.9 | 49.1 |"));
        CHECK(contains(text, "| Eaton | 20,193 | raw | - | - |"));
        CHECK(contains(text, "| Kenneth | 489 | raw | - | - |"));
        CHECK(contains(text, "| Hurst | 148 | raw | - | - |"));
        CHECK(contains(text, "| Palisades | Female | 24.9 | 53.9 | 21.2 |"));
        CHECK(contains(text, "| Palisades | Male | 26.9 | 55.6 | 17.5 |"));
    }
    SUBCASE("sections appear in a fixed order") {
        const auto pos = [&](const char* s) { return text.find(s); };
        CHECK(pos("## Burned area") < pos("## Classification accuracy"));
        CHECK(pos("## Classification accuracy") < pos("## Land cover"));
        CHECK(pos("## Land cover") < pos("## Structures"));
        CHECK(pos("## Structures") < pos("## Jurisdictions"));
        CHECK(pos("## Jurisdictions") < pos("## Population and demographics"));
    }
    CHECK(text.back() == '\n');
    CHECK(text.substr(text.size() - 2) != "\n\n");
}

TEST_CASE("rendering is deterministic and omits empty sections") {
    const auto in = fixtures::inputs();
    CHECK(render_report(in) == render_report(in));

    ReportInputs only_metrics;
    only_metrics.metrics = in.metrics;
    const auto text = render_report(only_metrics);
    CHECK(contains(text, "## Classification accuracy"));
    CHECK_FALSE(contains(text, "## Burned area"));
    CHECK_FALSE(contains(text, "## Structures"));
    CHECK_FALSE(contains(text, "## Population"));
}
