#include "kanfire/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "kanfire/error.hpp"
#include "kanfire/file_util.hpp"
#include "kanfire/impact.hpp"
#include "kanfire/log.hpp"

namespace kanfire {

namespace fs = std::filesystem;

namespace {

// Reads keys from one JSON object and rejects any key it was not asked about.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
        if (!j_.is_object()) throw InvalidArgument(context_ + " must be an object");
    }

    const Json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (const Json* v = find(key)) {
            try {
                out = v->get<T>();
            } catch (const nlohmann::json::exception&) {
                throw InvalidArgument("config key '" + where(key) + "' has the wrong type");
            }
        }
    }

    template <typename T>
    void read(const std::string& key, std::optional<T>& out) {
        if (j_.contains(key)) {
            T value{};
            read(key, value);
            out = std::move(value);
        } else {
            seen_.insert(key);
        }
    }

    std::string where(const std::string& key) const { return context_.empty() ? key : context_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) throw InvalidArgument("unknown config key '" + where(key) + "'");
        }
    }

private:
    const Json& j_;
    std::string context_;
    std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

template <typename F>
auto run_stage(const std::string& name, F&& body) -> decltype(body()) {
    log::StageTimer timer(name);
    const auto prefix = [&](const std::exception& e) { return name + ": " + e.what(); };
    try {
        return body();
    } catch (const TrainingDiverged& e) {
        throw TrainingDiverged(prefix(e), e.epoch());
    } catch (const AlignmentError& e) {
        throw AlignmentError(prefix(e));
    } catch (const FormatError& e) {
        throw FormatError(prefix(e));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(prefix(e));
    } catch (const Error& e) {
        throw Error(prefix(e));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(prefix(e));
    }
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_json(const fs::path& path, const Json& j) { atomic_write_file(path, j.dump(2) + "\n"); }

StructuringElement parse_element(const std::string& s) {
    if (s == "square3") return StructuringElement::square3;
    if (s == "cross3") return StructuringElement::cross3;
    throw InvalidArgument("unknown structuring element '" + s + "' (expected square3 or cross3)");
}

MorphOp parse_op(const std::string& s) {
    if (s == "open") return MorphOp::open;
    if (s == "close") return MorphOp::close;
    throw InvalidArgument("unknown morphology operation '" + s + "' (expected open or close)");
}

std::vector<FireMask> fire_masks(const PipelineConfig& config, const BurnMask& mask) {
    if (config.fires.empty()) return {{config.study_area_name, mask}};
    return split_by_fire(mask, config.fires, config.postprocess.connectivity);
}

void check_layer(const BurnMask& mask, const RasterGrid& layer, const std::string& name) {
    const NamedGrid grids[] = {{"burn_mask", std::cref(mask.grid)}, {name, std::cref(layer)}};
    align_check(grids);
}

}  // namespace

void PipelineConfig::validate() const {
    const auto must_exist = [](const fs::path& p, const char* key) {
        if (!fs::exists(p)) throw Error("input not found: " + p.string() + " (" + key + ")");
    };
    must_exist(post_stack, "inputs.post_stack");
    if (features == FeatureMode::pre_post) {
        if (!pre_stack) throw InvalidArgument("inputs.pre_stack is required when features = pre_post");
        must_exist(*pre_stack, "inputs.pre_stack");
    }
    if (labels) must_exist(*labels, "inputs.labels");
    if (landcover) must_exist(*landcover, "inputs.landcover");
    if (population) must_exist(*population, "inputs.population");
    if (dasymetric) {
        if (!population) throw InvalidArgument("inputs.dasymetric needs inputs.population");
        must_exist(dasymetric->settlement, "inputs.dasymetric.settlement");
    }
    if (age_sex) must_exist(*age_sex, "inputs.age_sex");
    if (jurisdictions) must_exist(*jurisdictions, "inputs.jurisdictions");
    if (footprints) must_exist(*footprints, "inputs.footprints");

    std::set<std::string> names;
    for (const auto& f : fires) {
        if (f.name.empty()) throw InvalidArgument("fire names must not be empty");
        if (f.name == kUnattributed) throw InvalidArgument("fire name '" + f.name + "' is reserved");
        if (!names.insert(f.name).second) throw InvalidArgument("duplicate fire name '" + f.name + "'");
        if (f.bbox.min_x > f.bbox.max_x || f.bbox.min_y > f.bbox.max_y) {
            throw InvalidArgument("fire '" + f.name + "' has an inverted bbox");
        }
    }
    if (samples_per_class == 0) throw InvalidArgument("sampling.samples_per_class must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("sampling.train_fraction must be in (0, 1)");
    if (training.batch_size < 2) throw InvalidArgument("training.batch_size must be at least 2");
    if (!(training.validation_fraction > 0.0 && training.validation_fraction < 1.0)) {
        throw InvalidArgument("training.validation_fraction must be in (0, 1)");
    }
    if (training.model.degree < 0) throw InvalidArgument("model.degree must be non-negative");
    if (!(training.model.dropout_rate >= 0.0 && training.model.dropout_rate < 1.0)) {
        throw InvalidArgument("model.dropout must be in [0, 1)");
    }
    postprocess.validate();
    if (threads < 1) throw InvalidArgument("threads must be at least 1");
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("malformed config: ") + e.what());
    }
    PipelineConfig c;
    ObjectReader top(root, "");

    if (const Json* inputs = top.find("inputs")) {
        ObjectReader in(*inputs, "inputs");
        const auto path_key = [&](const char* key, std::optional<fs::path>& out) {
            std::optional<std::string> s;
            in.read(key, s);
            if (s) out = resolve(base_dir, *s);
        };
        std::optional<fs::path> post;
        path_key("post_stack", post);
        if (!post) throw InvalidArgument("config key 'inputs.post_stack' is required");
        c.post_stack = *post;
        path_key("pre_stack", c.pre_stack);
        path_key("labels", c.labels);
        path_key("landcover", c.landcover);
        path_key("population", c.population);
        path_key("age_sex", c.age_sex);
        path_key("jurisdictions", c.jurisdictions);
        path_key("footprints", c.footprints);
        in.read("jurisdiction_attribute", c.jurisdiction_attribute);
        if (const Json* legend = in.find("landcover_legend")) {
            if (!legend->is_object()) throw InvalidArgument("inputs.landcover_legend must map codes to labels");
            for (const auto& [code, label] : legend->items()) {
                std::size_t used = 0;
                std::int64_t value = 0;
                try {
                    value = std::stoll(code, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != code.size() || !label.is_string()) {
                    throw InvalidArgument("inputs.landcover_legend entry '" + code + "' is not code -> label");
                }
                c.landcover_legend[value] = label.get<std::string>();
            }
        }
        if (const Json* d = in.find("dasymetric")) {
            ObjectReader dr(*d, "inputs.dasymetric");
            std::string settlement;
            std::vector<std::int64_t> codes;
            dr.read("settlement", settlement);
            dr.read("settled_codes", codes);
            dr.finish();
            if (settlement.empty()) throw InvalidArgument("config key 'inputs.dasymetric.settlement' is required");
            c.dasymetric = DasymetricConfig{resolve(base_dir, settlement), {codes.begin(), codes.end()}};
        }
        in.finish();
    } else {
        throw InvalidArgument("config key 'inputs' is required");
    }

    std::string features = "pre_post";
    top.read("features", features);
    if (features == "pre_post") {
        c.features = FeatureMode::pre_post;
    } else if (features == "post_only") {
        c.features = FeatureMode::post_only;
    } else {
        throw InvalidArgument("features must be pre_post or post_only, got '" + features + "'");
    }

    if (const Json* fires = top.find("fires")) {
        if (!fires->is_array()) throw InvalidArgument("fires must be a list");
        for (std::size_t i = 0; i < fires->size(); ++i) {
            ObjectReader fr((*fires)[i], "fires[" + std::to_string(i) + "]");
            FireHint hint;
            std::vector<double> bbox;
            fr.read("name", hint.name);
            fr.read("bbox", bbox);
            fr.finish();
            if (bbox.size() != 4) throw InvalidArgument(fr.where("bbox") + " must be [min_x, min_y, max_x, max_y]");
            hint.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
            c.fires.push_back(std::move(hint));
        }
    }
    top.read("study_area_name", c.study_area_name);

    if (const Json* s = top.find("sampling")) {
        ObjectReader sr(*s, "sampling");
        sr.read("samples_per_class", c.samples_per_class);
        sr.read("train_fraction", c.train_fraction);
        sr.finish();
    }
    if (const Json* m = top.find("model")) {
        ObjectReader mr(*m, "model");
        mr.read("hidden", c.training.model.hidden_dims);
        mr.read("degree", c.training.model.degree);
        mr.read("dropout", c.training.model.dropout_rate);
        mr.finish();
    }
    if (const Json* t = top.find("training")) {
        ObjectReader tr(*t, "training");
        tr.read("epochs", c.training.max_epochs);
        tr.read("batch_size", c.training.batch_size);
        tr.read("learning_rate", c.training.adam.learning_rate);
        tr.read("patience", c.training.patience);
        tr.read("validation_fraction", c.training.validation_fraction);
        tr.finish();
    }
    if (const Json* p = top.find("postprocess")) {
        ObjectReader pr(*p, "postprocess");
        std::optional<std::string> element;
        std::optional<std::vector<std::string>> ops;
        pr.read("element", element);
        pr.read("operations", ops);
        pr.read("min_component_pixels", c.postprocess.min_component_pixels);
        pr.read("connectivity", c.postprocess.connectivity);
        pr.finish();
        if (element) c.postprocess.element = parse_element(*element);
        if (ops) {
            c.postprocess.operations.clear();
            for (const auto& op : *ops) c.postprocess.operations.push_back(parse_op(op));
        }
    }
    if (const Json* a = top.find("assessment")) {
        ObjectReader ar(*a, "assessment");
        ar.read("landcover_other_threshold", c.landcover_other_threshold);
        ar.read("jurisdiction_other_threshold", c.jurisdiction_other_threshold);
        ar.finish();
    }
    top.read("seed", c.seed);
    std::optional<std::string> out;
    top.read("output_dir", out);
    c.output_dir = resolve(base_dir, out.value_or("out"));
    top.read("threads", c.threads);
    top.read("tile_rows", c.tile_rows);
    top.finish();
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw Error("config file not found: " + path.string());
    auto config = run_stage("config", [&] {
        return parse_config(read_file(path), fs::absolute(path).parent_path());
    });
    run_stage("config", [&] { config.validate(); });
    return config;
}

std::string file_stem(const std::string& name) {
    std::string out;
    for (unsigned char ch : name) {
        out += (std::isalnum(ch) || ch == '-' || ch == '_') ? static_cast<char>(ch) : '_';
    }
    return out.empty() ? "_" : out;
}

RasterGrid load_feature_stack(const PipelineConfig& config) {
    const RasterGrid post = read_raster(config.post_stack);
    if (config.features == FeatureMode::post_only) {
        const NamedGrid grids[] = {{"post", std::cref(post)}};
        return stack_bands(grids);
    }
    const RasterGrid pre = read_raster(*config.pre_stack);
    const NamedGrid grids[] = {{"pre", std::cref(pre)}, {"post", std::cref(post)}};
    return stack_bands(grids);
}

MetricsReport cmd_train(const PipelineConfig& config) {
    if (!config.labels) throw InvalidArgument("train: config key 'inputs.labels' is required");
    const RasterGrid stack = run_stage("load", [&] { return load_feature_stack(config); });
    const RasterGrid labels = run_stage("load", [&] { return read_raster(*config.labels); });
    run_stage("load", [&] {
        const NamedGrid grids[] = {{"features", std::cref(stack)}, {"labels", std::cref(labels)}};
        align_check(grids);
    });

    const auto samples = run_stage("sampling", [&] {
        return stratified_sample(stack, labels, config.samples_per_class, config.seed);
    });
    const auto [train_set, test_set] = run_stage("split", [&] {
        return split_train_test(samples, config.train_fraction, config.seed);
    });
    const auto result = run_stage("training", [&] { return train(config.training, train_set, config.seed); });
    const auto metrics = run_stage("evaluation", [&] { return evaluate(result.model, test_set); });

    run_stage("write", [&] {
        save_model(result.model, config.output_dir / kModelFile);
        Json m = to_json(metrics);
        m["train_samples"] = train_set.size();
        m["test_samples"] = test_set.size();
        m["best_epoch"] = result.best_epoch;
        write_json(config.output_dir / kMetricsFile, m);
        std::string csv = "epoch,train_loss,validation_loss,validation_accuracy\n";
        for (const auto& e : result.log) {
            csv += std::to_string(e.epoch) + "," + fmt17(e.train_loss) + "," + fmt17(e.validation_loss) + "," +
                   fmt17(e.validation_accuracy) + "\n";
        }
        atomic_write_file(config.output_dir / kTrainingLogFile, csv);
    });
    log::info("train: OA " + fmt17(metrics.overall_accuracy) + ", kappa " + fmt17(metrics.kappa) + ", F1 " +
              fmt17(metrics.f1_burned));
    return metrics;
}

std::vector<AreaSummary> cmd_predict(const PipelineConfig& config, const std::optional<fs::path>& model_path) {
    const fs::path path = model_path.value_or(config.output_dir / kModelFile);
    const auto model = run_stage("load", [&] { return load_model(path); });
    const RasterGrid stack = run_stage("load", [&] { return load_feature_stack(config); });

    const BurnMask raw = run_stage("prediction", [&] {
        return predict_mask(model, stack, PredictOptions{config.threads, config.tile_rows, 0});
    });
    const BurnMask mask = run_stage("postprocess", [&] { return morphology(raw, config.postprocess); });
    const auto fires = fire_masks(config, mask);

    std::vector<AreaSummary> areas;
    run_stage("write", [&] {
        write_raster(mask.to_grid(), config.output_dir / kMaskFile);
        for (const auto& f : fires) {
            if (!config.fires.empty()) {
                write_raster(f.mask.to_grid(), config.output_dir / "masks" / (file_stem(f.name) + ".hdr"));
            }
            areas.push_back(area_summary(f.mask, f.name, config.postprocess.connectivity));
        }
        atomic_write_file(config.output_dir / kAreasFile, areas_csv(areas));
    });
    return areas;
}

std::vector<FireAssessment> cmd_assess(const PipelineConfig& config, const std::optional<fs::path>& mask_path) {
    const fs::path path = mask_path.value_or(config.output_dir / kMaskFile);
    const BurnMask mask = run_stage("load", [&] {
        auto m = BurnMask::from_grid(read_raster(path));
        m.validate();
        return m;
    });

    std::optional<RasterGrid> landcover, population, age_sex;
    std::optional<PopulationSurface> refined;
    std::optional<std::vector<VectorFeature>> jurisdictions, footprints;
    run_stage("load", [&] {
        if (config.landcover) {
            landcover = read_raster(*config.landcover);
            check_layer(mask, *landcover, "landcover");
        }
        if (config.population) {
            population = read_raster(*config.population);
            if (config.dasymetric) {
                const RasterGrid settlement = read_raster(config.dasymetric->settlement);
                check_layer(mask, settlement, "settlement");
                refined = dasymetric_refine(*population, settlement, config.dasymetric->settled_codes);
                population = refined->to_raster();
            } else {
                check_layer(mask, *population, "population");
            }
        }
        if (config.age_sex) {
            age_sex = read_raster(*config.age_sex);
            check_layer(mask, *age_sex, "age_sex");
        }
        if (config.jurisdictions) jurisdictions = read_features(*config.jurisdictions);
        if (config.footprints) footprints = read_features(*config.footprints);
    });

    std::vector<FireAssessment> reports;
    run_stage("assessment", [&] {
        for (const auto& f : fire_masks(config, mask)) {
            FireAssessment a;
            a.fire_name = f.name;
            a.area = area_summary(f.mask, f.name, config.postprocess.connectivity);
            const bool empty = a.area.burned_pixels == 0;
            if (empty) log::warn("fire '" + f.name + "': mask has no burned pixels; reporting zeros");

            if (landcover) {
                a.landcover = empty ? CategoricalZoneReport{}
                                    : zonal_categorical(f.mask, *landcover, config.landcover_legend,
                                                        config.landcover_other_threshold);
                a.landcover->fire_name = f.name;
            }
            if (jurisdictions) {
                a.jurisdiction = empty ? CategoricalZoneReport{}
                                       : jurisdiction_shares(f.mask, *jurisdictions, config.jurisdiction_attribute,
                                                             config.jurisdiction_other_threshold);
                a.jurisdiction->fire_name = f.name;
            }
            if (population) {
                if (refined) {
                    double sum = 0.0;
                    for (std::size_t i = 0; i < refined->values.size(); ++i) {
                        if (f.mask.burned(i) && !std::isnan(refined->values[i])) sum += refined->values[i];
                    }
                    a.population = sum;
                    a.population_source = "dasymetric";
                } else {
                    a.population = population_exposure(f.mask, *population);
                    a.population_source = "raw";
                }
            }
            if (age_sex) {
                a.demographics = demographic_exposure(f.mask, *age_sex);
                a.demographics->fire_name = f.name;
            }
            if (footprints) {
                a.structures = building_damage(f.mask, *footprints);
                a.structures->fire_name = f.name;
            }
            reports.push_back(std::move(a));
        }
    });

    run_stage("write", [&] {
        const fs::path dir = config.output_dir / kReportsDir;
        Json index = Json::array();
        for (const auto& a : reports) {
            const std::string file = file_stem(a.fire_name) + ".json";
            write_json(dir / file, to_json(a));
            index.push_back({{"fire", a.fire_name}, {"file", file}});
        }
        write_json(dir / kReportIndexFile, index);
        std::vector<AreaSummary> areas;
        for (const auto& a : reports) areas.push_back(a.area);
        atomic_write_file(dir / kAreasFile, areas_csv(areas));
        if (landcover) atomic_write_file(dir / "landcover.csv", landcover_csv(reports));
        if (jurisdictions) atomic_write_file(dir / "jurisdiction.csv", jurisdiction_csv(reports));
        if (population) atomic_write_file(dir / "population.csv", population_csv(reports));
        if (age_sex) atomic_write_file(dir / "demographics.csv", demographics_csv(reports));
        if (footprints) atomic_write_file(dir / "structures.csv", structures_csv(reports));
    });
    return reports;
}

fs::path cmd_report(const fs::path& reports_dir, const std::optional<fs::path>& metrics_path, const fs::path& output) {
    return run_stage("report", [&] {
        if (!fs::is_directory(reports_dir)) throw Error("reports directory not found: " + reports_dir.string());
        ReportInputs inputs;

        std::vector<fs::path> files;
        const fs::path index_path = reports_dir / kReportIndexFile;
        if (fs::exists(index_path)) {
            for (const auto& entry : Json::parse(read_file(index_path))) {
                files.push_back(reports_dir / entry.at("file").get<std::string>());
            }
        } else {
            for (const auto& entry : fs::directory_iterator(reports_dir)) {
                const auto& p = entry.path();
                if (p.extension() == ".json" && p.filename() != kMetricsFile) files.push_back(p);
            }
            std::sort(files.begin(), files.end());
        }
        for (const auto& f : files) {
            if (!fs::exists(f)) throw Error("report file not found: " + f.string());
            inputs.fires.push_back(assessment_from_json(Json::parse(read_file(f))));
        }

        std::optional<fs::path> mpath = metrics_path;
        if (!mpath) {
            for (const auto& candidate : {reports_dir / kMetricsFile, reports_dir.parent_path() / kMetricsFile}) {
                if (fs::exists(candidate)) {
                    mpath = candidate;
                    break;
                }
            }
        } else if (!fs::exists(*mpath)) {
            throw Error("metrics file not found: " + mpath->string());
        }
        if (mpath) inputs.metrics = metrics_from_json(Json::parse(read_file(*mpath)));

        if (inputs.fires.empty() && !inputs.metrics) {
            throw InvalidArgument("no reports found in " + reports_dir.string());
        }
        atomic_write_file(output, render_report(inputs));
        return output;
    });
}

}  // namespace kanfire
