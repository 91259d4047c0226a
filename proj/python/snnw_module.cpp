#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "snnw/ensemble.hpp"
#include "snnw/evaluation.hpp"
#include "snnw/image_io.hpp"
#include "snnw/model_io.hpp"
#include "snnw/pipeline.hpp"
#include "snnw/runtime.hpp"

namespace py = pybind11;
using namespace snnw;
using nlohmann::json;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Image image_from_array(const FloatArray& a) {
    if (a.ndim() != 3 && a.ndim() != 2) throw std::invalid_argument("image must be (H, W) or (H, W, C)");
    const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
    const auto ch = a.ndim() == 3 ? static_cast<std::size_t>(a.shape(2)) : std::size_t{1};
    Image img(Shape{rows, cols, ch});
    std::copy(a.data(), a.data() + a.size(), img.data().begin());
    return img;
}

FloatArray array_from_image(const Image& img) {
    FloatArray out({img.dim(0), img.dim(1), img.dim(2)});
    std::copy(img.data().begin(), img.data().end(), out.mutable_data());
    return out;
}

RunConfig config_from(const std::string& config_json) {
    return config_json.empty() ? RunConfig{} : run_config_from_json(json::parse(config_json));
}

BoundingBox box_from(const std::array<std::int64_t, 4>& t) { return {t[0], t[1], t[2], t[3]}; }

py::dict metrics_dict(const MetricsReport& m) {
    py::dict d;
    auto opt = [](const std::optional<double>& v) -> py::object { return v ? py::object(py::float_(*v)) : py::object(py::none()); };
    d["accuracy"] = opt(m.accuracy);
    d["precision"] = opt(m.precision);
    d["recall"] = opt(m.recall);
    d["tp"] = m.counts.tp;
    d["fp"] = m.counts.fp;
    d["tn"] = m.counts.tn;
    d["fn"] = m.counts.fn;
    return d;
}

}  // namespace

PYBIND11_MODULE(_snnw, m) {
    tune_allocator();
    m.doc() = "Part-ensemble weapon detector core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_RuntimeError);
    py::register_exception<ModelFileError>(m, "ModelFileError", PyExc_IOError);
    py::register_exception<ImageIoError>(m, "ImageIoError", PyExc_IOError);

    m.def(
        "compute_metrics",
        [](std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
            return metrics_dict(compute_metrics({tp, fp, tn, fn}));
        },
        py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

    m.def(
        "iou", [](const std::array<std::int64_t, 4>& a, const std::array<std::int64_t, 4>& b) {
            return iou(box_from(a), box_from(b));
        },
        "Intersection over union of two (x, y, w, h) boxes");

    m.def("paper_miss_bound", &paper_miss_bound, py::arg("p"), py::arg("m"));
    m.def("paper_accuracy_bound", &paper_accuracy_bound, py::arg("p"), py::arg("m"));
    m.def("exact_miss_probability", &exact_miss_probability, py::arg("p"), py::arg("k"),
          "Probability that fewer than k independent parts fire");

    m.def(
        "slide_windows",
        [](std::size_t width, std::size_t height, std::size_t window, std::size_t stride) {
            WindowConfig c;
            c.window = window;
            c.stride = stride;
            std::vector<std::pair<std::int64_t, std::int64_t>> out;
            for (const auto& o : slide_windows(width, height, c)) out.emplace_back(o.x, o.y);
            return out;
        },
        py::arg("width"), py::arg("height"), py::arg("window") = 200, py::arg("stride") = 50);

    m.def(
        "load_image", [](const std::filesystem::path& p) { return array_from_image(load_image(p)); },
        "PNG or PPM as float32 (H, W, C) in [0, 1]");
    m.def(
        "save_png", [](const FloatArray& a, const std::filesystem::path& p) { save_png(image_from_array(a), p); },
        py::arg("image"), py::arg("path"));

    py::class_<TrainedPartNetwork>(m, "PartNetwork")
        .def_property_readonly("part", [](const TrainedPartNetwork& n) { return n.part.name(); })
        .def_property_readonly("parameter_count", [](const TrainedPartNetwork& n) { return n.net.parameter_count(); })
        .def_property_readonly("best_val_accuracy", [](const TrainedPartNetwork& n) { return n.meta.best_val_accuracy; })
        .def_property_readonly("best_epoch", [](const TrainedPartNetwork& n) { return n.meta.best_epoch; })
        .def(
            "predict",
            [](const TrainedPartNetwork& n, const FloatArray& window) {
                return predict_window(n, image_from_array(window)).p_present;
            },
            "P(part present) for one window matching the input geometry")
        .def("save", [](const TrainedPartNetwork& n, const std::filesystem::path& p) { save_model(n, p); });

    m.def(
        "load_model",
        [](const std::filesystem::path& p, const std::optional<std::string>& part) {
            return load_model(p, part ? std::optional<PartId>(PartId(*part)) : std::nullopt);
        },
        py::arg("path"), py::arg("part") = py::none());

    m.def("default_config", [] { return to_json(RunConfig{}).dump(); }, "Default run config as JSON text");
    m.def(
        "normalize_config", [](const std::string& j) { return to_json(config_from(j)).dump(); },
        "Validates a JSON config and fills in defaults");

    m.def(
        "synthesize",
        [](const std::string& config_json) {
            const auto c = config_from(config_json);
            c.validate();
            py::gil_scoped_release release;
            synthesize(c);
        },
        py::arg("config") = "");

    m.def(
        "train",
        [](const std::string& config_json, std::size_t jobs) {
            const auto c = config_from(config_json);
            c.validate();
            json reports = json::array();
            {
                py::gil_scoped_release release;
                for (const auto& o : train_tree(c, jobs)) reports.push_back(report_json(o.report));
            }
            return reports.dump();
        },
        py::arg("config") = "", py::arg("jobs") = 1);

    m.def(
        "detect",
        [](const FloatArray& image, const std::string& config_json) {
            const auto c = config_from(config_json);
            c.validate();
            const auto img = image_from_array(image);
            py::gil_scoped_release release;
            const auto nets = load_networks(c);
            return detection_document(detect(img, nets, c.window, c.ensemble_config(), c.workers), c).dump();
        },
        py::arg("image"), py::arg("config") = "", "Detection document as JSON text");

    m.def(
        "evaluate",
        [](const std::string& config_json, const std::vector<std::filesystem::path>& scenes) {
            const auto c = config_from(config_json);
            c.validate();
            py::gil_scoped_release release;
            const auto rep = evaluate_tree(c, scenes);
            return std::make_pair(rep.json(c).dump(), rep.text());
        },
        py::arg("config") = "", py::arg("scenes") = std::vector<std::filesystem::path>{});
}
