#include "kanfire/raster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "kanfire/error.hpp"
#include "kanfire/file_util.hpp"

namespace kanfire {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_float(float v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
    return buf;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw FormatError("header field '" + key + "' is not a number: " + text);
    }
}

std::size_t parse_size(const std::string& key, const std::string& text) {
    std::size_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw FormatError("header field '" + key + "' is not a count: " + text);
    return v;
}

std::vector<std::string> split_names(std::string_view s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.emplace_back(trim(s.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

double GridGeoreference::pixel_area() const { return pixel_size_x * std::abs(pixel_size_y); }

void GridGeoreference::validate() const {
    if (!(pixel_size_x > 0.0)) throw InvalidArgument("pixel_size_x must be positive");
    if (pixel_size_y == 0.0 || std::isnan(pixel_size_y)) throw InvalidArgument("pixel_size_y must be non-zero");
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) throw InvalidArgument("origin must be finite");
}

RasterGrid::RasterGrid(std::size_t width, std::size_t height, GridGeoreference georef, std::optional<float> nodata)
    : width_(width), height_(height), georef_(std::move(georef)), nodata_(nodata) {
    georef_.validate();
}

RasterGrid& RasterGrid::add_band(std::string name, std::vector<float> values) {
    if (values.size() != width_ * height_) {
        throw InvalidArgument("band '" + name + "' has " + std::to_string(values.size()) + " values, expected " +
                              std::to_string(width_ * height_));
    }
    if (name.empty() || name.find(',') != std::string::npos || name.find('\n') != std::string::npos) {
        throw InvalidArgument("invalid band name '" + name + "'");
    }
    if (band_index(name)) throw InvalidArgument("duplicate band name '" + name + "'");
    bands_.push_back(Band{std::move(name), std::move(values)});
    return *this;
}

RasterGrid& RasterGrid::add_band(std::string name, float fill) {
    return add_band(std::move(name), std::vector<float>(width_ * height_, fill));
}

const Band& RasterGrid::band(std::size_t index) const {
    if (index >= bands_.size()) throw InvalidArgument("band index out of range");
    return bands_[index];
}

Band& RasterGrid::band(std::size_t index) {
    if (index >= bands_.size()) throw InvalidArgument("band index out of range");
    return bands_[index];
}

const Band& RasterGrid::band(std::string_view name) const {
    const auto idx = band_index(name);
    if (!idx) throw InvalidArgument("no band named '" + std::string(name) + "'");
    return bands_[*idx];
}

std::optional<std::size_t> RasterGrid::band_index(std::string_view name) const {
    for (std::size_t i = 0; i < bands_.size(); ++i) {
        if (bands_[i].name == name) return i;
    }
    return std::nullopt;
}

std::vector<std::string> RasterGrid::band_names() const {
    std::vector<std::string> names;
    names.reserve(bands_.size());
    for (const auto& b : bands_) names.push_back(b.name);
    return names;
}

bool RasterGrid::is_nodata(float v) const noexcept {
    if (!nodata_) return false;
    if (std::isnan(*nodata_)) return std::isnan(v);
    return v == *nodata_;
}

std::optional<std::string> alignment_mismatch(const RasterGrid& a, const RasterGrid& b) {
    if (a.width() != b.width()) return "width";
    if (a.height() != b.height()) return "height";
    const auto& ga = a.georef();
    const auto& gb = b.georef();
    const auto differs = [](double x, double y) { return !(std::abs(x - y) <= kAlignTolerance); };
    if (differs(ga.origin_x, gb.origin_x)) return "origin_x";
    if (differs(ga.origin_y, gb.origin_y)) return "origin_y";
    if (differs(ga.pixel_size_x, gb.pixel_size_x)) return "pixel_size_x";
    if (differs(ga.pixel_size_y, gb.pixel_size_y)) return "pixel_size_y";
    return std::nullopt;
}

void align_check(std::span<const NamedGrid> grids) {
    if (grids.size() < 2) throw InvalidArgument("align_check needs at least two grids");
    const RasterGrid& ref = grids.front().grid.get();
    for (std::size_t i = 1; i < grids.size(); ++i) {
        const RasterGrid& g = grids[i].grid.get();
        if (auto field = alignment_mismatch(ref, g)) {
            const auto value_of = [&](const RasterGrid& r) -> std::string {
                const auto& geo = r.georef();
                if (*field == "width") return std::to_string(r.width());
                if (*field == "height") return std::to_string(r.height());
                if (*field == "origin_x") return format_double(geo.origin_x);
                if (*field == "origin_y") return format_double(geo.origin_y);
                if (*field == "pixel_size_x") return format_double(geo.pixel_size_x);
                return format_double(geo.pixel_size_y);
            };
            throw AlignmentError("grid '" + grids[i].name + "' is not aligned with '" + grids.front().name +
                                 "': " + *field + " " + value_of(g) + " vs " + value_of(ref));
        }
    }
}

void align_check(std::span<const RasterGrid> grids) {
    std::vector<NamedGrid> named;
    named.reserve(grids.size());
    for (std::size_t i = 0; i < grids.size(); ++i) named.push_back({"grid[" + std::to_string(i) + "]", grids[i]});
    align_check(named);
}

RasterGrid resample_nearest(const RasterGrid& source, const RasterGrid& target_template) {
    constexpr float kFallbackNodata = -9999.0f;
    const float nodata = source.nodata().value_or(kFallbackNodata);
    RasterGrid out(target_template.width(), target_template.height(), target_template.georef(), nodata);
    out.metadata = source.metadata;

    const auto& src = source.georef();
    const auto& dst = target_template.georef();
    const std::size_t w = target_template.width();
    const std::size_t h = target_template.height();

    // Source pixel index for each target column / row, or -1 when outside.
    std::vector<long long> col_map(w), row_map(h);
    for (std::size_t c = 0; c < w; ++c) {
        const double fx = std::floor((dst.center_x(c) - src.origin_x) / src.pixel_size_x);
        col_map[c] = (fx >= 0 && fx < static_cast<double>(source.width())) ? static_cast<long long>(fx) : -1;
    }
    for (std::size_t r = 0; r < h; ++r) {
        const double fy = std::floor((dst.center_y(r) - src.origin_y) / src.pixel_size_y);
        row_map[r] = (fy >= 0 && fy < static_cast<double>(source.height())) ? static_cast<long long>(fy) : -1;
    }

    for (const auto& band : source.bands()) {
        std::vector<float> values(w * h, nodata);
        for (std::size_t r = 0; r < h; ++r) {
            if (row_map[r] < 0) continue;
            const std::size_t src_row = static_cast<std::size_t>(row_map[r]) * source.width();
            for (std::size_t c = 0; c < w; ++c) {
                if (col_map[c] < 0) continue;
                const float v = band.values[src_row + static_cast<std::size_t>(col_map[c])];
                values[r * w + c] = source.is_nodata(v) ? nodata : v;
            }
        }
        out.add_band(band.name, std::move(values));
    }
    return out;
}

RasterGrid stack_bands(std::span<const NamedGrid> grids) {
    if (grids.empty()) throw InvalidArgument("stack_bands needs at least one grid");
    if (grids.size() > 1) align_check(grids);
    const RasterGrid& first = grids.front().grid.get();
    const float nodata = first.nodata().value_or(-9999.0f);
    RasterGrid out(first.width(), first.height(), first.georef(), nodata);
    for (const auto& named : grids) {
        const RasterGrid& g = named.grid.get();
        for (const auto& band : g.bands()) {
            std::vector<float> values = band.values;
            for (auto& v : values) {
                if (g.is_nodata(v)) v = nodata;
            }
            out.add_band(named.name.empty() ? band.name : named.name + ":" + band.name, std::move(values));
        }
    }
    return out;
}

std::filesystem::path payload_path(const std::filesystem::path& header_path) {
    auto p = header_path;
    p.replace_extension(".bin");
    if (p == header_path) p += ".bin";
    return p;
}

RasterGrid read_raster(const std::filesystem::path& header_path) {
    if (!std::filesystem::exists(header_path)) throw Error("raster header not found: " + header_path.string());
    const std::string text = read_file(header_path);

    std::map<std::string, std::string> fields;
    std::map<std::string, std::string> metadata;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto colon = view.find(':');
        if (colon == std::string_view::npos) throw FormatError("malformed header line: " + std::string(view));
        std::string key(trim(view.substr(0, colon)));
        std::string value(trim(view.substr(colon + 1)));
        if (key.starts_with("meta.")) {
            metadata[key.substr(5)] = value;
        } else {
            fields[key] = value;
        }
    }
    const auto field = [&](const char* key) -> const std::string& {
        const auto it = fields.find(key);
        if (it == fields.end()) throw FormatError(std::string("missing header field '") + key + "'");
        return it->second;
    };

    const std::size_t width = parse_size("width", field("width"));
    const std::size_t height = parse_size("height", field("height"));
    const auto names = split_names(field("band_names"));
    if (field("dtype") != "float32") throw FormatError("unknown dtype '" + field("dtype") + "'");
    std::optional<float> nodata;
    if (const auto& nd = field("nodata"); nd != "none") nodata = static_cast<float>(parse_double("nodata", nd));

    GridGeoreference georef;
    georef.origin_x = parse_double("origin_x", field("origin_x"));
    georef.origin_y = parse_double("origin_y", field("origin_y"));
    georef.pixel_size_x = parse_double("pixel_size_x", field("pixel_size_x"));
    georef.pixel_size_y = parse_double("pixel_size_y", field("pixel_size_y"));
    georef.crs_label = field("crs_label");

    const auto payload_file = payload_path(header_path);
    if (!std::filesystem::exists(payload_file)) throw FormatError("payload file not found: " + payload_file.string());
    const std::string payload = read_file(payload_file);
    const std::size_t per_band = width * height;
    const std::size_t expected = per_band * names.size() * sizeof(float);
    if (payload.size() < expected) throw FormatError("truncated payload: " + payload_file.string());
    if (payload.size() > expected) throw FormatError("payload longer than header declares: " + payload_file.string());

    RasterGrid grid(width, height, georef, nodata);
    grid.metadata = std::move(metadata);
    ByteReader reader(payload);
    for (const auto& name : names) {
        std::vector<float> values(per_band);
        for (auto& v : values) v = reader.get<float>();
        grid.add_band(name, std::move(values));
    }
    return grid;
}

void write_raster(const RasterGrid& grid, const std::filesystem::path& header_path) {
    if (grid.band_count() == 0) throw InvalidArgument("empty grid: no bands to write");
    grid.georef().validate();

    ByteWriter payload;
    for (const auto& band : grid.bands()) {
        for (float v : band.values) payload.put(v);
    }

    std::ostringstream header;
    header << "# kanfire raster header\n";
    header << "width: " << grid.width() << "\n";
    header << "height: " << grid.height() << "\n";
    header << "band_names: ";
    for (std::size_t i = 0; i < grid.band_count(); ++i) header << (i ? "," : "") << grid.band(i).name;
    header << "\n";
    header << "dtype: float32\n";
    header << "nodata: " << (grid.nodata() ? format_float(*grid.nodata()) : std::string("none")) << "\n";
    const auto& g = grid.georef();
    header << "origin_x: " << format_double(g.origin_x) << "\n";
    header << "origin_y: " << format_double(g.origin_y) << "\n";
    header << "pixel_size_x: " << format_double(g.pixel_size_x) << "\n";
    header << "pixel_size_y: " << format_double(g.pixel_size_y) << "\n";
    header << "crs_label: " << g.crs_label << "\n";
    for (const auto& [key, value] : grid.metadata) header << "meta." << key << ": " << value << "\n";

    // Payload first: a header on disk always points at a complete payload.
    atomic_write_file(payload_path(header_path), payload.bytes());
    atomic_write_file(header_path, header.str());
}

}  // namespace kanfire
