#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kanfire/raster.hpp"

namespace kanfire {

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

// Closed ring: front() == back(), at least 4 vertices.
using Ring = std::vector<Point>;

// rings[0] is the exterior (counter-clockwise), the rest are holes (clockwise).
struct Polygon {
    std::vector<Ring> rings;
};

struct BoundingBox {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

    bool contains(const Point& p) const { return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y; }
    bool intersects(const BoundingBox& o) const {
        return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
    }
};

using AttributeValue = std::variant<std::string, double>;

struct VectorFeature {
    std::vector<Polygon> polygons;  // one entry for Polygon, several for MultiPolygon
    std::map<std::string, AttributeValue> attributes;

    BoundingBox bounds() const;
    // Numeric attribute value; throws InvalidArgument when missing or textual.
    double numeric_attribute(const std::string& name) const;
    // Attribute rendered as text (numbers without trailing zeros).
    std::optional<std::string> text_attribute(const std::string& name) const;
};

// Validates closure / vertex count and orients exterior rings counter-clockwise
// and holes clockwise. Throws InvalidArgument on an invalid ring.
void normalize_polygon(Polygon& polygon);

double signed_area(const Ring& ring);

// Even-odd containment over all rings of the polygon. Points on any edge are inside.
bool polygon_contains(const Polygon& polygon, const Point& p);
bool feature_contains(const VectorFeature& feature, const Point& p);

// Area-weighted centroid over all parts (holes subtract).
Point feature_centroid(const VectorFeature& feature);

// True when the feature's area shares at least one point with the closed rectangle.
bool feature_intersects_box(const VectorFeature& feature, const BoundingBox& box);

// Extent of a grid in map coordinates.
BoundingBox grid_bounds(const GridGeoreference& georef, std::size_t width, std::size_t height);

// Parses a GeoJSON FeatureCollection, Feature or bare geometry text.
// Only Polygon / MultiPolygon geometries are accepted.
std::vector<VectorFeature> parse_features(std::string_view geojson_text);
std::vector<VectorFeature> read_features(const std::filesystem::path& path);

// Burns the numeric `attribute` of each feature into a single-band grid on
// the template's georeference, by pixel-center containment. Later features
// overwrite earlier ones; uncovered pixels are nodata.
RasterGrid rasterize(const std::vector<VectorFeature>& features, const RasterGrid& template_grid,
                     const std::string& attribute);

// Index of the last feature covering each pixel center, or -1.
std::vector<int> rasterize_index(const std::vector<VectorFeature>& features, const GridGeoreference& georef,
                                 std::size_t width, std::size_t height);

}  // namespace kanfire
