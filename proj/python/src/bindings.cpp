#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kanfire/burn_mapping.hpp"
#include "kanfire/cheby_kan.hpp"
#include "kanfire/error.hpp"
#include "kanfire/pipeline.hpp"
#include "kanfire/training.hpp"

namespace py = pybind11;
using namespace kanfire;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
    if (a.ndim() != 2) throw InvalidArgument("expected a 2-d feature array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data.begin());
    return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
    py::array_t<double> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

struct Image {
    BinaryImage pixels;
    std::size_t width, height;
};

Image to_image(const ByteArray& a) {
    if (a.ndim() != 2) throw InvalidArgument("expected a 2-d mask array");
    Image im{BinaryImage(a.data(), a.data() + a.size()), static_cast<std::size_t>(a.shape(1)),
             static_cast<std::size_t>(a.shape(0))};
    for (auto& v : im.pixels) v = v != 0;
    return im;
}

py::array_t<std::uint8_t> from_image(const BinaryImage& b, std::size_t width, std::size_t height) {
    py::array_t<std::uint8_t> out({height, width});
    std::copy(b.begin(), b.end(), out.mutable_data());
    return out;
}

StructuringElement element_of(const std::string& name) {
    if (name == "square3") return StructuringElement::square3;
    if (name == "cross3") return StructuringElement::cross3;
    throw InvalidArgument("unknown structuring element '" + name + "'");
}

std::vector<int> to_labels(const IntArray& a) { return {a.data(), a.data() + a.size()}; }

py::dict metrics_dict(const MetricsReport& m) {
    py::dict d;
    d["overall_accuracy"] = m.overall_accuracy;
    d["kappa"] = m.kappa;
    d["f1_burned"] = m.f1_burned;
    d["confusion_matrix"] = m.confusion_matrix.counts;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Chebyshev KAN burn-scar mapping";

    auto base = py::register_exception<Error>(m, "KanfireError", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<AlignmentError>(m, "AlignmentError", base.ptr());
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<TrainingDiverged>(m, "TrainingDiverged", base.ptr());

    m.def("chebyshev_basis", &chebyshev_basis, py::arg("x"), py::arg("degree"));

    py::class_<ChebyKanModel>(m, "Model")
        .def_readonly("layer_dims", &ChebyKanModel::layer_dims)
        .def_readonly("degree", &ChebyKanModel::degree)
        .def_readonly("dropout_rate", &ChebyKanModel::dropout_rate)
        .def_readonly("band_names", &ChebyKanModel::band_names)
        .def_readonly("seed", &ChebyKanModel::seed)
        .def_property_readonly("input_dim", &ChebyKanModel::input_dim)
        .def_static("load", &load_model, py::arg("path"))
        .def("save", [](const ChebyKanModel& self, const std::filesystem::path& p) { save_model(self, p); })
        .def("logits", [](const ChebyKanModel& self, const DoubleArray& x) {
            return from_matrix(model_infer(self, to_matrix(x)));
        })
        .def("predict", [](const ChebyKanModel& self, const DoubleArray& x) {
            return predict_classes(model_infer(self, to_matrix(x)));
        });

    m.def(
        "train",
        [](const DoubleArray& features, const IntArray& labels, std::vector<std::string> band_names, std::uint64_t seed,
           std::vector<std::size_t> hidden, int degree, double dropout, int epochs, std::size_t batch_size,
           int patience) {
            LabeledSampleSet set;
            set.features = to_matrix(features);
            set.labels = to_labels(labels);
            if (band_names.empty()) {
                for (std::size_t b = 0; b < set.features.cols; ++b) band_names.push_back("b" + std::to_string(b));
            }
            set.band_names = std::move(band_names);
            set.seed = seed;
            for (std::size_t i = 0; i < set.size(); ++i) set.pixels.push_back({i, 0});
            TrainConfig config;
            config.model = {std::move(hidden), degree, dropout};
            config.max_epochs = epochs;
            config.batch_size = batch_size;
            config.patience = patience;
            TrainingResult result;
            {
                py::gil_scoped_release release;
                result = train(config, set, seed);
            }
            return py::make_tuple(std::move(result.model), result.best_epoch, result.log.size());
        },
        py::arg("features"), py::arg("labels"), py::arg("band_names") = std::vector<std::string>{},
        py::arg("seed") = 42, py::arg("hidden") = std::vector<std::size_t>{32, 16}, py::arg("degree") = 4,
        py::arg("dropout") = 0.3, py::arg("epochs") = 100, py::arg("batch_size") = 256, py::arg("patience") = 10,
        "Train on (N, B) features with 0/1 labels. Returns (model, best_epoch, epochs_run).");

    m.def(
        "metrics",
        [](const IntArray& truth, const IntArray& predicted) {
            const auto t = to_labels(truth), p = to_labels(predicted);
            return metrics_dict(MetricsReport::from(ConfusionMatrix::from_predictions(t, p)));
        },
        py::arg("truth"), py::arg("predicted"));

    m.def(
        "opening",
        [](const ByteArray& a, const std::string& element) {
            const auto im = to_image(a);
            return from_image(opening(im.pixels, im.width, im.height, element_of(element)), im.width, im.height);
        },
        py::arg("mask"), py::arg("element") = "square3");
    m.def(
        "closing",
        [](const ByteArray& a, const std::string& element) {
            const auto im = to_image(a);
            return from_image(closing(im.pixels, im.width, im.height, element_of(element)), im.width, im.height);
        },
        py::arg("mask"), py::arg("element") = "square3");
    m.def(
        "connected_components",
        [](const ByteArray& a, int connectivity) {
            const auto im = to_image(a);
            const auto c = connected_components(im.pixels, im.width, im.height, connectivity);
            py::array_t<int> labels({im.height, im.width});
            std::copy(c.labels.begin(), c.labels.end(), labels.mutable_data());
            return py::make_tuple(labels, c.sizes);
        },
        py::arg("mask"), py::arg("connectivity") = 8);

    m.def(
        "pixels_to_hectares",
        [](std::size_t pixels, double pixel_size_x, double pixel_size_y) {
            GridGeoreference g;
            g.pixel_size_x = pixel_size_x;
            g.pixel_size_y = pixel_size_y;
            return pixels_to_hectares(pixels, g);
        },
        py::arg("pixels"), py::arg("pixel_size_x") = 10.0, py::arg("pixel_size_y") = -10.0);

    // Pipeline commands, driven by a config file like the command-line tool.
    m.def(
        "run_train",
        [](const std::filesystem::path& config) {
            const auto c = load_config(config);
            MetricsReport report;
            {
                py::gil_scoped_release release;
                report = cmd_train(c);
            }
            return metrics_dict(report);
        },
        py::arg("config"));
    m.def(
        "run_predict",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> model) {
            const auto c = load_config(config);
            std::vector<AreaSummary> areas;
            {
                py::gil_scoped_release release;
                areas = cmd_predict(c, model);
            }
            py::list out;
            for (const auto& a : areas) {
                py::dict d;
                d["fire"] = a.fire_name;
                d["burned_pixels"] = a.burned_pixels;
                d["burned_hectares"] = a.burned_hectares;
                d["component_count"] = a.component_count;
                out.append(d);
            }
            return out;
        },
        py::arg("config"), py::arg("model") = py::none());
    m.def(
        "run_assess",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> mask) {
            const auto c = load_config(config);
            {
                py::gil_scoped_release release;
                cmd_assess(c, mask);
            }
            return c.output_dir / kReportsDir;
        },
        py::arg("config"), py::arg("mask") = py::none(), "Writes the per-fire reports; returns their directory.");
    m.def(
        "run_report",
        [](const std::filesystem::path& config) {
            const auto c = load_config(config);
            return cmd_report(c.output_dir / kReportsDir, std::nullopt, c.output_dir / kReportFile);
        },
        py::arg("config"));
}
