#include "kanfire/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "kanfire/error.hpp"
#include "kanfire/file_util.hpp"

namespace kanfire {

namespace {

using nlohmann::json;

constexpr double kEdgeTolerance = 1e-9;

bool on_segment(const Point& a, const Point& b, const Point& p) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    if (len == 0.0) return std::hypot(p.x - a.x, p.y - a.y) <= kEdgeTolerance;
    const double cross = dx * (p.y - a.y) - dy * (p.x - a.x);
    if (std::abs(cross) / len > kEdgeTolerance) return false;
    const double dot = dx * (p.x - a.x) + dy * (p.y - a.y);
    return dot >= -kEdgeTolerance * len && dot <= len * len + kEdgeTolerance * len;
}

int orientation(const Point& a, const Point& b, const Point& c) {
    const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return (v > 0) - (v < 0);
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    return on_segment(p1, p2, q1) || on_segment(p1, p2, q2) || on_segment(q1, q2, p1) || on_segment(q1, q2, p2);
}

Ring parse_ring(const json& coords) {
    if (!coords.is_array()) throw FormatError("ring coordinates must be an array");
    Ring ring;
    ring.reserve(coords.size());
    for (const auto& pos : coords) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
            throw FormatError("malformed coordinate position");
        }
        ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    return ring;
}

Polygon parse_polygon(const json& coords) {
    if (!coords.is_array() || coords.empty()) throw FormatError("polygon coordinates must be a non-empty array");
    Polygon poly;
    for (const auto& ring : coords) poly.rings.push_back(parse_ring(ring));
    try {
        normalize_polygon(poly);
    } catch (const InvalidArgument& e) {
        throw FormatError(e.what());
    }
    return poly;
}

std::vector<Polygon> parse_geometry(const json& geometry) {
    if (!geometry.is_object() || !geometry.contains("type")) throw FormatError("geometry without a type");
    const auto type = geometry.at("type").get<std::string>();
    if (type == "Polygon") return {parse_polygon(geometry.at("coordinates"))};
    if (type == "MultiPolygon") {
        std::vector<Polygon> parts;
        for (const auto& part : geometry.at("coordinates")) parts.push_back(parse_polygon(part));
        if (parts.empty()) throw FormatError("empty MultiPolygon");
        return parts;
    }
    throw FormatError("non-areal geometry: " + type);
}

VectorFeature parse_feature(const json& feature) {
    VectorFeature out;
    if (!feature.contains("geometry") || feature.at("geometry").is_null()) {
        throw FormatError("feature without geometry");
    }
    out.polygons = parse_geometry(feature.at("geometry"));
    if (feature.contains("properties") && feature.at("properties").is_object()) {
        for (const auto& [key, value] : feature.at("properties").items()) {
            if (value.is_number()) {
                out.attributes[key] = value.get<double>();
            } else if (value.is_string()) {
                out.attributes[key] = value.get<std::string>();
            } else if (value.is_boolean()) {
                out.attributes[key] = std::string(value.get<bool>() ? "true" : "false");
            }
        }
    }
    return out;
}

}  // namespace

BoundingBox VectorFeature::bounds() const {
    BoundingBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& poly : polygons) {
        for (const auto& p : poly.rings.front()) {
            box.min_x = std::min(box.min_x, p.x);
            box.min_y = std::min(box.min_y, p.y);
            box.max_x = std::max(box.max_x, p.x);
            box.max_y = std::max(box.max_y, p.y);
        }
    }
    return box;
}

double VectorFeature::numeric_attribute(const std::string& name) const {
    const auto it = attributes.find(name);
    if (it == attributes.end()) throw InvalidArgument("feature has no attribute '" + name + "'");
    if (const auto* v = std::get_if<double>(&it->second)) return *v;
    throw InvalidArgument("attribute '" + name + "' is not numeric: " + std::get<std::string>(it->second));
}

std::optional<std::string> VectorFeature::text_attribute(const std::string& name) const {
    const auto it = attributes.find(name);
    if (it == attributes.end()) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", std::get<double>(it->second));
    return std::string(buf);
}

double signed_area(const Ring& ring) {
    if (ring.empty()) return 0.0;
    // Relative to the first vertex to avoid cancellation at map-scale coordinates.
    const Point o = ring.front();
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        twice += (ring[i].x - o.x) * (ring[i + 1].y - o.y) - (ring[i + 1].x - o.x) * (ring[i].y - o.y);
    }
    return 0.5 * twice;
}

void normalize_polygon(Polygon& polygon) {
    if (polygon.rings.empty()) throw InvalidArgument("polygon has no rings");
    for (std::size_t i = 0; i < polygon.rings.size(); ++i) {
        auto& ring = polygon.rings[i];
        if (ring.size() < 4) throw InvalidArgument("ring has fewer than 4 vertices");
        if (!(ring.front() == ring.back())) throw InvalidArgument("ring is not closed");
        const double area = signed_area(ring);
        const bool want_ccw = (i == 0);
        if ((want_ccw && area < 0) || (!want_ccw && area > 0)) std::reverse(ring.begin(), ring.end());
    }
}

bool polygon_contains(const Polygon& polygon, const Point& p) {
    bool inside = false;
    for (const auto& ring : polygon.rings) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const Point& a = ring[i];
            const Point& b = ring[i + 1];
            if (on_segment(a, b, p)) return true;
            if ((a.y > p.y) != (b.y > p.y)) {
                const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if (p.x < x_cross) inside = !inside;
            }
        }
    }
    return inside;
}

bool feature_contains(const VectorFeature& feature, const Point& p) {
    for (const auto& poly : feature.polygons) {
        if (polygon_contains(poly, p)) return true;
    }
    return false;
}

Point feature_centroid(const VectorFeature& feature) {
    double area = 0.0, cx = 0.0, cy = 0.0;
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    Point o{};
    if (!feature.polygons.empty() && !feature.polygons.front().rings.empty() &&
        !feature.polygons.front().rings.front().empty()) {
        o = feature.polygons.front().rings.front().front();
    }
    for (const auto& poly : feature.polygons) {
        for (const auto& ring : poly.rings) {
            for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
                const Point a{ring[i].x - o.x, ring[i].y - o.y};
                const Point b{ring[i + 1].x - o.x, ring[i + 1].y - o.y};
                const double cross = a.x * b.y - b.x * a.y;
                area += cross;
                cx += (a.x + b.x) * cross;
                cy += (a.y + b.y) * cross;
                sx += a.x;
                sy += a.y;
                ++n;
            }
        }
    }
    if (std::abs(area) < 1e-300 || n == 0) {
        return n ? Point{o.x + sx / static_cast<double>(n), o.y + sy / static_cast<double>(n)} : Point{};
    }
    return {o.x + cx / (3.0 * area), o.y + cy / (3.0 * area)};
}

bool feature_intersects_box(const VectorFeature& feature, const BoundingBox& box) {
    if (!feature.bounds().intersects(box)) return false;
    const Point corners[5] = {{box.min_x, box.min_y},
                              {box.max_x, box.min_y},
                              {box.max_x, box.max_y},
                              {box.min_x, box.max_y},
                              {box.min_x, box.min_y}};
    for (const auto& poly : feature.polygons) {
        for (const auto& p : poly.rings.front()) {
            if (box.contains(p)) return true;
        }
        for (int k = 0; k < 4; ++k) {
            if (polygon_contains(poly, corners[k])) return true;
        }
        for (const auto& ring : poly.rings) {
            for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
                for (int k = 0; k < 4; ++k) {
                    if (segments_intersect(ring[i], ring[i + 1], corners[k], corners[k + 1])) return true;
                }
            }
        }
    }
    return false;
}

BoundingBox grid_bounds(const GridGeoreference& georef, std::size_t width, std::size_t height) {
    const double x0 = georef.origin_x;
    const double x1 = georef.origin_x + static_cast<double>(width) * georef.pixel_size_x;
    const double y0 = georef.origin_y;
    const double y1 = georef.origin_y + static_cast<double>(height) * georef.pixel_size_y;
    return {std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
}

std::vector<VectorFeature> parse_features(std::string_view geojson_text) {
    json doc;
    try {
        doc = json::parse(geojson_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("malformed feature file: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("type")) throw FormatError("malformed feature file: missing type");
    std::vector<VectorFeature> out;
    try {
        const auto type = doc.at("type").get<std::string>();
        if (type == "FeatureCollection") {
            for (const auto& f : doc.at("features")) out.push_back(parse_feature(f));
        } else if (type == "Feature") {
            out.push_back(parse_feature(doc));
        } else {
            VectorFeature f;
            f.polygons = parse_geometry(doc);
            out.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed feature file: ") + e.what());
    }
    return out;
}

std::vector<VectorFeature> read_features(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error("feature file not found: " + path.string());
    return parse_features(read_file(path));
}

std::vector<int> rasterize_index(const std::vector<VectorFeature>& features, const GridGeoreference& georef,
                                 std::size_t width, std::size_t height) {
    std::vector<int> index(width * height, -1);
    const auto pixel_range = [](double lo, double hi, double origin, double size, std::size_t n) {
        const double t1 = (lo - origin) / size - 0.5;
        const double t2 = (hi - origin) / size - 0.5;
        // Widened by one pixel; the containment test decides membership.
        const double first = std::floor(std::min(t1, t2)) - 1.0;
        const double last = std::ceil(std::max(t1, t2)) + 1.0;
        const double max_index = static_cast<double>(n) - 1.0;
        return std::pair<long long, long long>{static_cast<long long>(std::max(0.0, first)),
                                               static_cast<long long>(std::min(max_index, last))};
    };
    for (std::size_t f = 0; f < features.size(); ++f) {
        const auto box = features[f].bounds();
        if (!std::isfinite(box.min_x)) continue;
        const auto [c0, c1] = pixel_range(box.min_x, box.max_x, georef.origin_x, georef.pixel_size_x, width);
        const auto [r0, r1] = pixel_range(box.min_y, box.max_y, georef.origin_y, georef.pixel_size_y, height);
        for (long long r = r0; r <= r1; ++r) {
            const double y = georef.center_y(static_cast<std::size_t>(r));
            for (long long c = c0; c <= c1; ++c) {
                const Point center{georef.center_x(static_cast<std::size_t>(c)), y};
                if (feature_contains(features[f], center)) {
                    index[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)] = static_cast<int>(f);
                }
            }
        }
    }
    return index;
}

RasterGrid rasterize(const std::vector<VectorFeature>& features, const RasterGrid& template_grid,
                     const std::string& attribute) {
    std::vector<float> codes;
    codes.reserve(features.size());
    for (const auto& f : features) codes.push_back(static_cast<float>(f.numeric_attribute(attribute)));

    const float nodata = template_grid.nodata().value_or(-9999.0f);
    const auto index =
        rasterize_index(features, template_grid.georef(), template_grid.width(), template_grid.height());
    std::vector<float> values(index.size(), nodata);
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= 0) values[i] = codes[static_cast<std::size_t>(index[i])];
    }
    RasterGrid out(template_grid.width(), template_grid.height(), template_grid.georef(), nodata);
    out.add_band(attribute, std::move(values));
    return out;
}

}  // namespace kanfire
