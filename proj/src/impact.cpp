#include "kanfire/impact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kanfire/error.hpp"
#include "kanfire/parallel.hpp"

namespace kanfire {

namespace {

void check_aligned(const BurnMask& mask, const RasterGrid& layer, const char* layer_name) {
    const NamedGrid grids[] = {{"burn_mask", std::cref(mask.grid)}, {layer_name, std::cref(layer)}};
    align_check(grids);
    if (layer.band_count() == 0) throw InvalidArgument(std::string(layer_name) + " has no bands");
}

struct ClassCount {
    std::string label;
    std::size_t pixels = 0;
};

CategoricalZoneReport fold_report(const std::map<std::int64_t, ClassCount>& counts, std::size_t residual,
                                  std::size_t total, double threshold) {
    CategoricalZoneReport report;
    report.total_pixels = total;
    report.other_pixels = residual;
    const double denom = static_cast<double>(total);
    for (const auto& [code, c] : counts) {
        if (c.pixels == 0) continue;
        const double pct = 100.0 * static_cast<double>(c.pixels) / denom;
        if (pct < threshold) {
            report.other_pixels += c.pixels;
        } else {
            report.entries.push_back({code, c.label, c.pixels, pct});
        }
    }
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const ZoneEntry& a, const ZoneEntry& b) { return a.pixels > b.pixels; });
    report.other_percent = 100.0 * static_cast<double>(report.other_pixels) / denom;
    return report;
}

std::int64_t class_code(float v) {
    const double d = static_cast<double>(v);
    if (!std::isfinite(d) || d != std::round(d)) {
        throw InvalidArgument("class grid holds a non-integer code: " + std::to_string(d));
    }
    return static_cast<std::int64_t>(d);
}

}  // namespace

double CategoricalZoneReport::percent_sum() const {
    double s = other_percent;
    for (const auto& e : entries) s += e.percent;
    return s;
}

CategoricalZoneReport zonal_categorical(const BurnMask& mask, const RasterGrid& class_grid,
                                        const std::map<std::int64_t, std::string>& labels,
                                        double other_threshold_percent) {
    check_aligned(mask, class_grid, "class_grid");
    const auto& classes = class_grid.band(0).values;
    std::map<std::int64_t, ClassCount> counts;
    std::size_t total = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (!mask.burned(i) || class_grid.is_nodata(classes[i])) continue;
        const auto code = class_code(classes[i]);
        auto [it, inserted] = counts.try_emplace(code);
        if (inserted) {
            const auto l = labels.find(code);
            it->second.label = l != labels.end() ? l->second : "class " + std::to_string(code);
        }
        ++it->second.pixels;
        ++total;
    }
    if (total == 0) throw InvalidArgument("zonal statistics: no burned pixel with a valid class");
    return fold_report(counts, 0, total, other_threshold_percent);
}

double population_exposure(const BurnMask& mask, const RasterGrid& pop_grid) {
    check_aligned(mask, pop_grid, "population");
    const auto& pop = pop_grid.band(0).values;
    double sum = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (pop_grid.is_nodata(pop[i])) continue;
        if (pop[i] < 0.0f) throw InvalidArgument("population grid holds a negative value");
        if (mask.burned(i)) sum += static_cast<double>(pop[i]);
    }
    return sum;
}

int age_band_of(int cohort_start) {
    if (cohort_start < 20) return 0;
    if (cohort_start < 60) return 1;
    return 2;
}

ExposureReport demographic_exposure(const BurnMask& mask, const RasterGrid& age_sex) {
    check_aligned(mask, age_sex, "age_sex");
    ExposureReport report;
    for (const char sex : {'f', 'm'}) {
        SexExposure& s = sex == 'f' ? report.female : report.male;
        for (int start : kCohortStarts) {
            const std::string name = std::string(1, sex) + "_" + std::to_string(start);
            const auto idx = age_sex.band_index(name);
            if (!idx) throw InvalidArgument("missing cohort band '" + name + "'");
            const auto& values = age_sex.band(*idx).values;
            double sum = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (age_sex.is_nodata(values[i])) continue;
                if (values[i] < 0.0f) throw InvalidArgument("cohort band '" + name + "' holds a negative value");
                if (mask.burned(i)) sum += static_cast<double>(values[i]);
            }
            s.bands[static_cast<std::size_t>(age_band_of(start))] += sum;
        }
        s.people = s.bands[0] + s.bands[1] + s.bands[2];
        for (std::size_t b = 0; b < 3; ++b) s.band_percent[b] = s.people > 0 ? 100.0 * s.bands[b] / s.people : 0.0;
    }
    report.total_people = report.female.people + report.male.people;
    if (report.total_people > 0) {
        report.female.percent = 100.0 * report.female.people / report.total_people;
        report.male.percent = 100.0 * report.male.people / report.total_people;
        for (std::size_t b = 0; b < 3; ++b) {
            report.band_percent[b] = 100.0 * (report.female.bands[b] + report.male.bands[b]) / report.total_people;
        }
    }
    return report;
}

CategoricalZoneReport jurisdiction_shares(const BurnMask& mask, const std::vector<VectorFeature>& features,
                                          const std::string& agency_attribute, double other_threshold_percent) {
    std::vector<std::int64_t> feature_code(features.size(), -1);
    std::map<std::int64_t, ClassCount> counts;
    std::map<std::string, std::int64_t> code_of;
    for (std::size_t f = 0; f < features.size(); ++f) {
        const auto agency = features[f].text_attribute(agency_attribute);
        if (!agency) {
            throw InvalidArgument("jurisdiction feature " + std::to_string(f) + " lacks attribute '" +
                                  agency_attribute + "'");
        }
        if (*agency == kOtherLabel) continue;
        auto [it, inserted] = code_of.try_emplace(*agency, static_cast<std::int64_t>(code_of.size()));
        if (inserted) counts[it->second].label = *agency;
        feature_code[f] = it->second;
    }
    const auto index = rasterize_index(features, mask.grid.georef(), mask.width(), mask.height());
    std::size_t residual = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (!mask.burned(i)) continue;
        ++total;
        const int f = index[i];
        const std::int64_t code = f < 0 ? -1 : feature_code[static_cast<std::size_t>(f)];
        if (code < 0) {
            ++residual;
        } else {
            ++counts[code].pixels;
        }
    }
    if (total == 0) throw InvalidArgument("jurisdiction shares: mask has no burned pixels");
    return fold_report(counts, residual, total, other_threshold_percent);
}

StructureImpactReport building_damage(const BurnMask& mask, const std::vector<VectorFeature>& footprints) {
    const auto& geo = mask.grid.georef();
    const std::size_t w = mask.width(), h = mask.height();
    const auto extent = grid_bounds(geo, w, h);
    const auto burned_at = [&](long long r, long long c) {
        return r >= 0 && c >= 0 && r < static_cast<long long>(h) && c < static_cast<long long>(w) &&
               mask.burned(static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c));
    };
    // Column/row range whose pixel centers may fall in [lo, hi] along one axis.
    const auto index_range = [](double lo, double hi, double origin, double size, std::size_t n) {
        double a = (lo - origin) / size - 0.5;
        double b = (hi - origin) / size - 0.5;
        if (a > b) std::swap(a, b);
        const auto first = static_cast<long long>(std::max(0.0, std::floor(a) - 1.0));
        const auto last = static_cast<long long>(std::min(static_cast<double>(n) - 1.0, std::ceil(b) + 1.0));
        return std::pair{first, last};
    };

    StructureImpactReport report;
    for (const auto& fp : footprints) {
        if (!feature_intersects_box(fp, extent)) continue;
        ++report.total_in_extent;
        const Point c = feature_centroid(fp);
        bool damaged = burned_at(static_cast<long long>(std::floor((c.y - geo.origin_y) / geo.pixel_size_y)),
                                 static_cast<long long>(std::floor((c.x - geo.origin_x) / geo.pixel_size_x)));
        if (!damaged) {
            const auto b = fp.bounds();
            const auto [c0, c1] = index_range(b.min_x, b.max_x, geo.origin_x, geo.pixel_size_x, w);
            const auto [r0, r1] = index_range(b.min_y, b.max_y, geo.origin_y, geo.pixel_size_y, h);
            for (long long r = r0; r <= r1 && !damaged; ++r) {
                for (long long col = c0; col <= c1 && !damaged; ++col) {
                    if (!burned_at(r, col)) continue;
                    damaged = feature_contains(fp, {geo.center_x(static_cast<std::size_t>(col)),
                                                    geo.center_y(static_cast<std::size_t>(r))});
                }
            }
        }
        if (damaged) ++report.damaged_count;
    }
    return report;
}

double PopulationSurface::total() const {
    double s = 0.0;
    for (double v : values) {
        if (!std::isnan(v)) s += v;
    }
    return s;
}

RasterGrid PopulationSurface::to_raster(const std::string& band_name) const {
    constexpr float nodata = -9999.0f;
    std::vector<float> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::isnan(values[i]) ? nodata : static_cast<float>(values[i]);
    RasterGrid grid(width, height, georef, nodata);
    grid.add_band(band_name, std::move(out));
    return grid;
}

PopulationSurface dasymetric_refine(const RasterGrid& coarse_pop, const RasterGrid& settlement_classes,
                                    const std::set<std::int64_t>& settled_codes) {
    const auto& cg = coarse_pop.georef();
    const auto& fg = settlement_classes.georef();
    if (coarse_pop.band_count() == 0 || settlement_classes.band_count() == 0) {
        throw InvalidArgument("dasymetric: empty input grid");
    }
    if (std::abs(cg.origin_x - fg.origin_x) > kAlignTolerance || std::abs(cg.origin_y - fg.origin_y) > kAlignTolerance) {
        throw AlignmentError("dasymetric: coarse and fine grids do not share an origin");
    }
    const auto ratio = [](double coarse, double fine, const char* axis) {
        const double r = coarse / fine;
        const double n = std::round(r);
        if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, n)) {
            throw InvalidArgument(std::string("dasymetric: resolution ratio along ") + axis + " is not an integer (" +
                                  std::to_string(r) + ")");
        }
        return static_cast<std::size_t>(n);
    };
    const std::size_t rx = ratio(cg.pixel_size_x, fg.pixel_size_x, "x");
    const std::size_t ry = ratio(cg.pixel_size_y, fg.pixel_size_y, "y");
    const std::size_t fw = settlement_classes.width(), fh = settlement_classes.height();
    if (fw != coarse_pop.width() * rx || fh != coarse_pop.height() * ry) {
        throw AlignmentError("dasymetric: fine grid extent does not match the coarse grid");
    }

    PopulationSurface out;
    out.width = fw;
    out.height = fh;
    out.georef = fg;
    out.values.assign(fw * fh, 0.0);
    const auto& pop = coarse_pop.band(0).values;
    const auto& cls = settlement_classes.band(0).values;
    const auto settled = [&](std::size_t i) {
        const float v = cls[i];
        if (settlement_classes.is_nodata(v) || !std::isfinite(v) || v != std::round(v)) return false;
        return settled_codes.contains(static_cast<std::int64_t>(v));
    };
    for (std::size_t cr = 0; cr < coarse_pop.height(); ++cr) {
        for (std::size_t cc = 0; cc < coarse_pop.width(); ++cc) {
            const float p = pop[cr * coarse_pop.width() + cc];
            const bool missing = coarse_pop.is_nodata(p) || !std::isfinite(p);
            if (!missing && p < 0.0f) throw InvalidArgument("dasymetric: negative population");
            std::size_t n_settled = 0;
            for (std::size_t r = cr * ry; r < (cr + 1) * ry; ++r) {
                for (std::size_t c = cc * rx; c < (cc + 1) * rx; ++c) n_settled += settled(r * fw + c) ? 1 : 0;
            }
            const bool fallback = n_settled == 0;
            const double share = missing ? 0.0
                                         : static_cast<double>(p) / static_cast<double>(fallback ? rx * ry : n_settled);
            for (std::size_t r = cr * ry; r < (cr + 1) * ry; ++r) {
                for (std::size_t c = cc * rx; c < (cc + 1) * rx; ++c) {
                    const std::size_t i = r * fw + c;
                    if (missing) {
                        out.values[i] = std::numeric_limits<double>::quiet_NaN();
                    } else {
                        out.values[i] = (fallback || settled(i)) ? share : 0.0;
                    }
                }
            }
        }
    }
    return out;
}

RasterGrid focal_stat(const RasterGrid& grid, int radius, FocalStat stat, int threads) {
    if (radius < 1) throw InvalidArgument("focal_stat: radius must be at least 1");
    const float nodata = grid.nodata().value_or(-9999.0f);
    RasterGrid out(grid.width(), grid.height(), grid.georef(), nodata);
    const auto w = static_cast<long long>(grid.width());
    const auto h = static_cast<long long>(grid.height());
    for (const auto& band : grid.bands()) {
        std::vector<float> result(band.values.size(), nodata);
        parallel_for(static_cast<std::size_t>(h), threads, [&](std::size_t row) {
            const auto r = static_cast<long long>(row);
            for (long long c = 0; c < w; ++c) {
                double sum = 0.0;
                std::size_t n = 0;
                for (long long rr = std::max(0LL, r - radius); rr <= std::min(h - 1, r + radius); ++rr) {
                    for (long long cc = std::max(0LL, c - radius); cc <= std::min(w - 1, c + radius); ++cc) {
                        const float v = band.values[static_cast<std::size_t>(rr * w + cc)];
                        if (grid.is_nodata(v) || std::isnan(v)) continue;
                        sum += static_cast<double>(v);
                        ++n;
                    }
                }
                if (n == 0) continue;
                const double value = stat == FocalStat::sum ? sum : sum / static_cast<double>(n);
                result[static_cast<std::size_t>(r * w + c)] = static_cast<float>(value);
            }
        });
        out.add_band(band.name, std::move(result));
    }
    return out;
}

}  // namespace kanfire
