#pragma once

// Brute-force reference implementations for the overlay operations. They
// share no code with the library beyond the data types.

#include <array>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "kanfire/burn_mapping.hpp"
#include "kanfire/geometry.hpp"
#include "kanfire/raster.hpp"
#include "test_support.hpp"

namespace oracle {

struct Rect {
    double x0, y0, x1, y1;
};

inline bool burned(const kanfire::BurnMask& m, std::size_t r, std::size_t c) {
    return m.grid.band(0).values[r * m.width() + c] == 1.0f;
}

// Per-class burned pixel counts; pixels with a nodata class are skipped.
inline std::map<long long, std::size_t> zonal_counts(const kanfire::BurnMask& m, const kanfire::RasterGrid& classes) {
    std::map<long long, std::size_t> out;
    for (std::size_t r = 0; r < m.height(); ++r) {
        for (std::size_t c = 0; c < m.width(); ++c) {
            const float v = classes.at(0, r, c);
            if (burned(m, r, c) && !classes.is_nodata(v)) ++out[static_cast<long long>(v)];
        }
    }
    return out;
}

inline double masked_sum(const kanfire::BurnMask& m, const kanfire::RasterGrid& g, std::size_t band) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.height(); ++r) {
        for (std::size_t c = 0; c < m.width(); ++c) {
            const float v = g.at(band, r, c);
            if (burned(m, r, c) && !g.is_nodata(v)) s += v;
        }
    }
    return s;
}

// [sex][band] sums, walking pixels in the outer loop.
inline std::array<std::array<double, 3>, 2> cohort_bands(const kanfire::BurnMask& m, const kanfire::RasterGrid& g) {
    std::array<std::array<double, 3>, 2> out{};
    for (std::size_t r = 0; r < m.height(); ++r) {
        for (std::size_t c = 0; c < m.width(); ++c) {
            if (!burned(m, r, c)) continue;
            for (std::size_t b = 0; b < g.band_count(); ++b) {
                const auto& name = g.band(b).name;
                const int sex = name[0] == 'f' ? 0 : 1;
                const int age = std::stoi(name.substr(2));
                const int band = age <= 15 ? 0 : (age <= 55 ? 1 : 2);
                const float v = g.at(b, r, c);
                if (!g.is_nodata(v)) out[static_cast<std::size_t>(sex)][static_cast<std::size_t>(band)] += v;
            }
        }
    }
    return out;
}

// Burned pixels per agency label; uncovered pixels under "".
inline std::map<std::string, std::size_t> agency_counts(const kanfire::BurnMask& m,
                                                        const std::vector<kanfire::VectorFeature>& fs,
                                                        const std::string& attr) {
    std::map<std::string, std::size_t> out;
    const auto& g = m.grid.georef();
    for (std::size_t r = 0; r < m.height(); ++r) {
        for (std::size_t c = 0; c < m.width(); ++c) {
            if (!burned(m, r, c)) continue;
            std::string label;
            for (std::size_t k = fs.size(); k-- > 0;) {
                if (testing::crossing_inside(fs[k], g.center_x(c), g.center_y(r))) {
                    label = std::get<std::string>(fs[k].attributes.at(attr));
                    break;
                }
            }
            ++out[label];
        }
    }
    return out;
}

// Axis-aligned footprints: damaged if a burned pixel center lies in the closed
// rectangle or the rectangle center lies in a burned pixel.
inline std::pair<std::size_t, std::size_t> building_counts(const kanfire::BurnMask& m, const std::vector<Rect>& rects) {
    const auto& g = m.grid.georef();
    const double gx0 = g.origin_x, gx1 = g.origin_x + g.pixel_size_x * static_cast<double>(m.width());
    const double gy1 = g.origin_y, gy0 = g.origin_y + g.pixel_size_y * static_cast<double>(m.height());
    std::size_t damaged = 0, total = 0;
    for (const auto& rc : rects) {
        if (rc.x1 < gx0 || rc.x0 > gx1 || rc.y1 < gy0 || rc.y0 > gy1) continue;
        ++total;
        bool hit = false;
        for (std::size_t r = 0; r < m.height() && !hit; ++r) {
            for (std::size_t c = 0; c < m.width() && !hit; ++c) {
                const double x = g.center_x(c), y = g.center_y(r);
                hit = burned(m, r, c) && x >= rc.x0 && x <= rc.x1 && y >= rc.y0 && y <= rc.y1;
            }
        }
        if (!hit) {
            const double cx = 0.5 * (rc.x0 + rc.x1), cy = 0.5 * (rc.y0 + rc.y1);
            const double col = std::floor((cx - g.origin_x) / g.pixel_size_x);
            const double row = std::floor((cy - g.origin_y) / g.pixel_size_y);
            hit = col >= 0 && row >= 0 && col < static_cast<double>(m.width()) &&
                  row < static_cast<double>(m.height()) &&
                  burned(m, static_cast<std::size_t>(row), static_cast<std::size_t>(col));
        }
        damaged += hit;
    }
    return {damaged, total};
}

// Naive window statistic for one band; returns NaN where the window is empty.
inline std::vector<double> focal(const kanfire::RasterGrid& g, std::size_t band, int radius, bool mean) {
    const long w = static_cast<long>(g.width()), h = static_cast<long>(g.height());
    std::vector<double> out(g.pixel_count(), std::nan(""));
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            double s = 0.0;
            int n = 0;
            for (long dr = -radius; dr <= radius; ++dr) {
                for (long dc = -radius; dc <= radius; ++dc) {
                    const long rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
                    const float v = g.at(band, static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
                    if (g.is_nodata(v)) continue;
                    s += v;
                    ++n;
                }
            }
            if (n > 0) out[static_cast<std::size_t>(r * w + c)] = mean ? s / n : s;
        }
    }
    return out;
}

inline bool rel_close(double a, double b, double tol = 1e-9) {
    return a == b || std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace oracle

namespace gen {

inline kanfire::RasterGrid class_grid(std::mt19937_64& rng, std::size_t w, std::size_t h, int n_classes,
                                      double p_nodata) {
    std::uniform_real_distribution<double> u(0, 1);
    kanfire::RasterGrid g(w, h, testing::geo(), -1.0f);
    std::vector<float> v(w * h);
    for (auto& x : v) x = u(rng) < p_nodata ? -1.0f : static_cast<float>(rng() % static_cast<unsigned>(n_classes) + 1);
    g.add_band("class", v);
    return g;
}

inline kanfire::RasterGrid population(std::mt19937_64& rng, std::size_t w, std::size_t h, double p_nodata) {
    std::uniform_real_distribution<double> u(0, 1);
    kanfire::RasterGrid g(w, h, testing::geo(), -9999.0f);
    std::vector<float> v(w * h);
    for (auto& x : v) x = u(rng) < p_nodata ? -9999.0f : static_cast<float>(u(rng) * 250.0);
    g.add_band("population", v);
    return g;
}

inline kanfire::RasterGrid age_sex(std::mt19937_64& rng, std::size_t w, std::size_t h) {
    std::uniform_real_distribution<double> u(0, 1);
    kanfire::RasterGrid g(w, h, testing::geo(), -9999.0f);
    for (const char* sex : {"f", "m"}) {
        for (int start : {0, 1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80}) {
            std::vector<float> v(w * h);
            for (auto& x : v) x = u(rng) < 0.03 ? -9999.0f : static_cast<float>(u(rng) * 12.0);
            g.add_band(std::string(sex) + "_" + std::to_string(start), v);
        }
    }
    return g;
}

// Random axis-aligned agency rectangles with coordinates off the pixel lattice.
inline std::vector<kanfire::VectorFeature> agencies(std::mt19937_64& rng, std::size_t w, std::size_t h, int n) {
    static const char* names[] = {"USFS", "CNTY", "City", "REG", "NGO", "Other", "NPS"};
    const auto g = testing::geo();
    std::uniform_real_distribution<double> ux(g.origin_x - 50, g.origin_x + 10.0 * static_cast<double>(w) + 50);
    std::uniform_real_distribution<double> uy(g.origin_y - 10.0 * static_cast<double>(h) - 50, g.origin_y + 50);
    std::vector<kanfire::VectorFeature> out;
    for (int k = 0; k < n; ++k) {
        double x0 = ux(rng) + 0.31, x1 = ux(rng) + 0.47, y0 = uy(rng) + 0.29, y1 = uy(rng) + 0.53;
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        auto f = testing::rect_feature(x0, y0, x1 + 1.0, y1 + 1.0);
        f.attributes["agency"] = std::string(names[rng() % 7]);
        out.push_back(std::move(f));
    }
    return out;
}

inline std::vector<oracle::Rect> footprints(std::mt19937_64& rng, std::size_t w, std::size_t h, int n) {
    const auto g = testing::geo();
    std::uniform_real_distribution<double> ux(g.origin_x - 40, g.origin_x + 10.0 * static_cast<double>(w) + 40);
    std::uniform_real_distribution<double> uy(g.origin_y - 10.0 * static_cast<double>(h) - 40, g.origin_y + 40);
    std::uniform_real_distribution<double> size(0.5, 35.0);
    std::vector<oracle::Rect> out;
    for (int k = 0; k < n; ++k) {
        const double x = ux(rng) + 0.13, y = uy(rng) + 0.17;
        out.push_back({x, y, x + size(rng), y + size(rng)});
    }
    return out;
}

inline std::vector<kanfire::VectorFeature> as_features(const std::vector<oracle::Rect>& rects) {
    std::vector<kanfire::VectorFeature> out;
    for (const auto& r : rects) out.push_back(testing::rect_feature(r.x0, r.y0, r.x1, r.y1));
    return out;
}

}  // namespace gen
