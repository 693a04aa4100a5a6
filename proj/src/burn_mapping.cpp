#include "kanfire/burn_mapping.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "kanfire/error.hpp"
#include "kanfire/file_util.hpp"
#include "kanfire/parallel.hpp"

namespace kanfire {

namespace {

struct Offset {
    int dr, dc;
};

std::span<const Offset> element_offsets(StructuringElement element) {
    static constexpr std::array<Offset, 9> square{
        {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 0}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
    static constexpr std::array<Offset, 5> cross{{{-1, 0}, {0, -1}, {0, 0}, {0, 1}, {1, 0}}};
    if (element == StructuringElement::square3) return square;
    return cross;
}

std::string model_identifier(const ChebyKanModel& model) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize_model(model))));
    return buf;
}

}  // namespace

BurnMask BurnMask::from_grid(RasterGrid grid) {
    if (grid.band_count() == 0) throw InvalidArgument("mask grid has no bands");
    std::vector<float> values = grid.band(0).values;
    for (auto& v : values) {
        if (grid.is_nodata(v)) {
            v = kMaskNodata;
        } else if (v != kMaskUnburned && v != kMaskBurned && v != kMaskNodata) {
            throw InvalidArgument("mask value " + std::to_string(v) + " is not 0, 1 or nodata");
        }
    }
    BurnMask mask;
    mask.grid = RasterGrid(grid.width(), grid.height(), grid.georef(), kMaskNodata);
    mask.grid.add_band(kMaskBandName, std::move(values));
    const auto meta = [&](const char* key) {
        const auto it = grid.metadata.find(key);
        return it == grid.metadata.end() ? std::string() : it->second;
    };
    mask.provenance = {meta("model_id"), meta("decision_rule"), meta("postprocess")};
    return mask;
}

BurnMask BurnMask::blank(std::size_t width, std::size_t height, const GridGeoreference& georef) {
    BurnMask mask;
    mask.grid = RasterGrid(width, height, georef, kMaskNodata);
    mask.grid.add_band(kMaskBandName, kMaskUnburned);
    return mask;
}

RasterGrid BurnMask::to_grid() const {
    RasterGrid out = grid;
    if (!provenance.model_id.empty()) out.metadata["model_id"] = provenance.model_id;
    if (!provenance.decision_rule.empty()) out.metadata["decision_rule"] = provenance.decision_rule;
    if (!provenance.postprocess.empty()) out.metadata["postprocess"] = provenance.postprocess;
    return out;
}

std::size_t BurnMask::burned_pixels() const {
    return static_cast<std::size_t>(std::count(values().begin(), values().end(), kMaskBurned));
}

void BurnMask::validate() const {
    if (grid.band_count() != 1) throw InvalidArgument("burn mask must have exactly one band");
    for (float v : values()) {
        if (v != kMaskUnburned && v != kMaskBurned && v != kMaskNodata) {
            throw InvalidArgument("burn mask holds a value other than 0, 1 or nodata");
        }
    }
}

BurnMask predict_mask(const ChebyKanModel& model, const RasterGrid& stack, const PredictOptions& options) {
    const auto names = stack.band_names();
    if (names.size() != model.band_names.size()) {
        throw InvalidArgument("band mismatch: stack has " + std::to_string(names.size()) + " bands, model expects " +
                              std::to_string(model.band_names.size()));
    }
    for (std::size_t b = 0; b < names.size(); ++b) {
        if (names[b] != model.band_names[b]) {
            throw InvalidArgument("band mismatch at position " + std::to_string(b) + ": stack has '" + names[b] +
                                  "', model expects '" + model.band_names[b] + "'");
        }
    }

    const std::size_t w = stack.width();
    const std::size_t h = stack.height();
    const std::size_t tile_rows = options.tile_rows ? options.tile_rows : h;
    const std::size_t tile_cols = options.tile_cols ? options.tile_cols : w;
    const std::size_t tiles_down = (h + tile_rows - 1) / tile_rows;
    const std::size_t tiles_across = (w + tile_cols - 1) / tile_cols;

    BurnMask mask = BurnMask::blank(w, h, stack.georef());
    auto& out = mask.values();
    const std::size_t n_bands = stack.band_count();

    parallel_for(tiles_down * tiles_across, options.threads, [&](std::size_t tile) {
        const std::size_t r0 = (tile / tiles_across) * tile_rows;
        const std::size_t c0 = (tile % tiles_across) * tile_cols;
        const std::size_t r1 = std::min(h, r0 + tile_rows);
        const std::size_t c1 = std::min(w, c0 + tile_cols);

        std::vector<std::size_t> pixels;
        pixels.reserve((r1 - r0) * (c1 - c0));
        for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t c = c0; c < c1; ++c) {
                const std::size_t p = r * w + c;
                bool valid = true;
                for (std::size_t b = 0; b < n_bands && valid; ++b) {
                    const float v = stack.bands()[b].values[p];
                    valid = !stack.is_nodata(v) && std::isfinite(v);
                }
                if (valid) {
                    pixels.push_back(p);
                } else {
                    out[p] = kMaskNodata;
                }
            }
        }
        if (pixels.empty()) return;
        Matrix x(pixels.size(), n_bands);
        for (std::size_t i = 0; i < pixels.size(); ++i) {
            for (std::size_t b = 0; b < n_bands; ++b) x(i, b) = static_cast<double>(stack.bands()[b].values[pixels[i]]);
        }
        const auto classes = predict_classes(model_infer(model, x));
        for (std::size_t i = 0; i < pixels.size(); ++i) out[pixels[i]] = classes[i] == 1 ? kMaskBurned : kMaskUnburned;
    });

    mask.provenance.model_id = model_identifier(model);
    mask.provenance.decision_rule = "argmax;ties=unburned";
    mask.provenance.postprocess = "none";
    return mask;
}

std::string PostprocessParams::describe() const {
    std::string s = element == StructuringElement::square3 ? "element=square3x3" : "element=cross3x3";
    s += ";ops=";
    for (std::size_t i = 0; i < operations.size(); ++i) {
        s += (i ? "," : "");
        s += operations[i] == MorphOp::open ? "open" : "close";
    }
    s += ";min_component_pixels=" + std::to_string(min_component_pixels);
    s += ";connectivity=" + std::to_string(connectivity);
    return s;
}

void PostprocessParams::validate() const {
    if (connectivity != 4 && connectivity != 8) throw InvalidArgument("connectivity must be 4 or 8");
}

BinaryImage erode(const BinaryImage& image, std::size_t width, std::size_t height, StructuringElement element,
                  ErosionBorder border) {
    const auto offsets = element_offsets(element);
    BinaryImage out(image.size(), 0);
    const auto w = static_cast<long long>(width);
    const auto h = static_cast<long long>(height);
    for (long long r = 0; r < h; ++r) {
        for (long long c = 0; c < w; ++c) {
            if (!image[static_cast<std::size_t>(r * w + c)]) continue;
            bool keep = true;
            for (const auto& o : offsets) {
                const long long rr = r + o.dr, cc = c + o.dc;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) {
                    if (border == ErosionBorder::unburned) {
                        keep = false;
                        break;
                    }
                    continue;
                }
                if (!image[static_cast<std::size_t>(rr * w + cc)]) {
                    keep = false;
                    break;
                }
            }
            out[static_cast<std::size_t>(r * w + c)] = keep ? 1 : 0;
        }
    }
    return out;
}

BinaryImage dilate(const BinaryImage& image, std::size_t width, std::size_t height, StructuringElement element) {
    const auto offsets = element_offsets(element);
    BinaryImage out(image.size(), 0);
    const auto w = static_cast<long long>(width);
    const auto h = static_cast<long long>(height);
    for (long long r = 0; r < h; ++r) {
        for (long long c = 0; c < w; ++c) {
            for (const auto& o : offsets) {
                const long long rr = r + o.dr, cc = c + o.dc;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                if (image[static_cast<std::size_t>(rr * w + cc)]) {
                    out[static_cast<std::size_t>(r * w + c)] = 1;
                    break;
                }
            }
        }
    }
    return out;
}

BinaryImage opening(const BinaryImage& image, std::size_t width, std::size_t height, StructuringElement element) {
    return dilate(erode(image, width, height, element, ErosionBorder::unburned), width, height, element);
}

BinaryImage closing(const BinaryImage& image, std::size_t width, std::size_t height, StructuringElement element) {
    return erode(dilate(image, width, height, element), width, height, element, ErosionBorder::ignore);
}

BinaryImage burned_image(const BurnMask& mask) {
    const auto& v = mask.values();
    BinaryImage img(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) img[i] = v[i] == kMaskBurned ? 1 : 0;
    return img;
}

BurnMask morphology(const BurnMask& mask, const PostprocessParams& params) {
    params.validate();
    const std::size_t w = mask.width(), h = mask.height();
    BinaryImage img = burned_image(mask);
    for (auto op : params.operations) {
        img = op == MorphOp::open ? opening(img, w, h, params.element) : closing(img, w, h, params.element);
    }
    if (params.min_component_pixels > 0) {
        const auto comps = connected_components(img, w, h, params.connectivity);
        for (std::size_t i = 0; i < img.size(); ++i) {
            const int label = comps.labels[i];
            if (label > 0 && comps.sizes[static_cast<std::size_t>(label - 1)] < params.min_component_pixels) img[i] = 0;
        }
    }
    BurnMask out = mask;
    auto& values = out.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (mask.is_nodata(i)) continue;
        values[i] = img[i] ? kMaskBurned : kMaskUnburned;
    }
    out.provenance.postprocess = params.describe();
    return out;
}

ComponentLabels connected_components(const BinaryImage& image, std::size_t width, std::size_t height,
                                     int connectivity) {
    if (connectivity != 4 && connectivity != 8) throw InvalidArgument("connectivity must be 4 or 8");
    if (image.size() != width * height) throw InvalidArgument("image size does not match dimensions");
    static constexpr Offset four[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    static constexpr Offset eight[] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
    const std::span<const Offset> neighbours = connectivity == 4 ? std::span<const Offset>(four)
                                                                 : std::span<const Offset>(eight);
    ComponentLabels result;
    result.labels.assign(image.size(), 0);
    const auto w = static_cast<long long>(width);
    const auto h = static_cast<long long>(height);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < image.size(); ++start) {
        if (!image[start] || result.labels[start]) continue;
        const int label = static_cast<int>(result.sizes.size()) + 1;
        std::size_t size = 0;
        result.labels[start] = label;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++size;
            const long long r = static_cast<long long>(p) / w;
            const long long c = static_cast<long long>(p) % w;
            for (const auto& o : neighbours) {
                const long long rr = r + o.dr, cc = c + o.dc;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                const auto q = static_cast<std::size_t>(rr * w + cc);
                if (image[q] && !result.labels[q]) {
                    result.labels[q] = label;
                    stack.push_back(q);
                }
            }
        }
        result.sizes.push_back(size);
    }
    return result;
}

ComponentLabels connected_components(const BurnMask& mask, int connectivity) {
    return connected_components(burned_image(mask), mask.width(), mask.height(), connectivity);
}

double pixels_to_hectares(std::size_t pixels, const GridGeoreference& georef) {
    return static_cast<double>(pixels) * georef.pixel_size_x * std::abs(georef.pixel_size_y) / 10000.0;
}

AreaSummary area_summary(const BurnMask& mask, const std::string& fire_name, int connectivity) {
    AreaSummary s;
    s.fire_name = fire_name;
    s.burned_pixels = mask.burned_pixels();
    s.burned_hectares = pixels_to_hectares(s.burned_pixels, mask.grid.georef());
    s.component_count = s.burned_pixels ? connected_components(mask, connectivity).count() : 0;
    s.pixel_area_m2 = mask.grid.georef().pixel_area();
    return s;
}

std::vector<FireMask> split_by_fire(const BurnMask& mask, std::span<const FireHint> hints, int connectivity) {
    const auto comps = connected_components(mask, connectivity);
    const auto& geo = mask.grid.georef();
    const std::size_t w = mask.width();

    std::vector<double> sum_x(comps.count(), 0.0), sum_y(comps.count(), 0.0);
    for (std::size_t p = 0; p < comps.labels.size(); ++p) {
        const int label = comps.labels[p];
        if (!label) continue;
        sum_x[static_cast<std::size_t>(label - 1)] += geo.center_x(p % w);
        sum_y[static_cast<std::size_t>(label - 1)] += geo.center_y(p / w);
    }
    // owner[k] = hint index for component k + 1, or hints.size() when unattributed
    std::vector<std::size_t> owner(comps.count(), hints.size());
    for (std::size_t k = 0; k < comps.count(); ++k) {
        const double n = static_cast<double>(comps.sizes[k]);
        const Point centroid{sum_x[k] / n, sum_y[k] / n};
        for (std::size_t f = 0; f < hints.size(); ++f) {
            if (hints[f].bbox.contains(centroid)) {
                owner[k] = f;
                break;
            }
        }
    }

    std::vector<FireMask> out;
    for (std::size_t f = 0; f <= hints.size(); ++f) {
        BurnMask fire = mask;
        auto& values = fire.values();
        std::size_t burned = 0;
        for (std::size_t p = 0; p < values.size(); ++p) {
            const int label = comps.labels[p];
            if (!label) continue;
            if (owner[static_cast<std::size_t>(label - 1)] == f) {
                ++burned;
            } else {
                values[p] = kMaskUnburned;
            }
        }
        if (f == hints.size()) {
            if (burned > 0) out.push_back({kUnattributed, std::move(fire)});
        } else {
            out.push_back({hints[f].name, std::move(fire)});
        }
    }
    return out;
}

}  // namespace kanfire
