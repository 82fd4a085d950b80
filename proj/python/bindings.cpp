// Python bindings for the core pruning operations.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mipr/baselines.hpp"
#include "mipr/datagen.hpp"
#include "mipr/mi.hpp"
#include "mipr/model_io.hpp"
#include "mipr/pruner.hpp"
#include "mipr/selector.hpp"
#include "mipr/stats.hpp"
#include "mipr/version.hpp"

namespace py = pybind11;
using namespace mipr;

namespace {

Mat mat_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("matrix: needs at least one row");
    Mat m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols) throw std::invalid_argument("matrix: ragged rows");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i));
    }
    return m;
}

std::vector<std::vector<double>> mat_to_rows(const Mat& m) {
    std::vector<std::vector<double>> rows(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) rows[i].assign(m.row(i), m.row(i) + m.cols);
    return rows;
}

Dataset dataset_from_py(const std::vector<std::vector<double>>& inputs,
                        const std::vector<int>& labels, int n_classes) {
    Dataset d;
    d.inputs = mat_from_rows(inputs);
    d.labels = labels;
    if (n_classes == 0) {
        int maxl = -1;
        for (int l : labels) maxl = std::max(maxl, l);
        n_classes = maxl + 1;
    }
    d.n_classes = n_classes;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "mutual-information structured pruning core";
    m.attr("__version__") = kVersion;

    py::class_<Network>(m, "Network")
        .def_property_readonly("input_dim", [](const Network& n) { return n.input_dim; })
        .def_property_readonly("depth", &Network::depth)
        .def_property_readonly("level_dims", &Network::level_dims)
        .def_property_readonly("param_count", &Network::param_count)
        .def("weight", [](const Network& n, std::size_t layer) {
            if (layer >= n.depth()) throw std::invalid_argument("layer out of range");
            return mat_to_rows(n.layers[layer].weight);
        })
        .def("bias", [](const Network& n, std::size_t layer) {
            if (layer >= n.depth()) throw std::invalid_argument("layer out of range");
            return n.layers[layer].bias;
        });

    py::class_<MaskSet>(m, "MaskSet")
        .def_property_readonly("kept", [](const MaskSet& ms) { return ms.kept; })
        .def_property_readonly("masks", [](const MaskSet& ms) { return ms.masks; })
        .def("all_ones", &MaskSet::all_ones);

    py::class_<CovarianceModel>(m, "CovarianceModel")
        .def_static(
            "from_matrix",
            [](const std::vector<std::vector<double>>& sigma, std::size_t split) {
                return CovarianceModel::from_matrix(mat_from_rows(sigma), split);
            },
            py::arg("sigma"), py::arg("split"))
        .def_property_readonly("dim", &CovarianceModel::dim)
        .def_property_readonly("split", [](const CovarianceModel& c) { return c.split; });

    py::class_<Selection>(m, "Selection")
        .def_property_readonly("chosen", [](const Selection& s) { return s.chosen; })
        .def_property_readonly("trace", [](const Selection& s) { return s.trace; })
        .def_property_readonly("objective", [](const Selection& s) { return s.objective; });

    m.def("make_mlp",
          [](std::size_t input_dim, const std::vector<std::size_t>& hidden, std::size_t n_classes,
             const std::string& act, std::uint64_t seed) {
              return make_mlp(input_dim, hidden, n_classes, activation_from_string(act), seed);
          },
          py::arg("input_dim"), py::arg("hidden"), py::arg("n_classes"), py::arg("activation"),
          py::arg("seed"));

    m.def("train",
          [](Network& net, const std::vector<std::vector<double>>& inputs,
             const std::vector<int>& labels, std::size_t steps, std::size_t batch_size, double lr,
             const std::string& optimizer, std::uint64_t seed) {
              const Dataset d = dataset_from_py(inputs, labels, 0);
              TrainConfig cfg;
              cfg.steps = steps;
              cfg.batch_size = batch_size;
              cfg.lr = lr;
              cfg.optimizer = optimizer_from_string(optimizer);
              cfg.seed = seed;
              return train(net, d, cfg).final_loss;
          },
          py::arg("net"), py::arg("inputs"), py::arg("labels"), py::arg("steps") = 500,
          py::arg("batch_size") = 32, py::arg("lr") = 0.01, py::arg("optimizer") = "adam",
          py::arg("seed") = 1);

    m.def("evaluate",
          [](const Network& net, const std::vector<std::vector<double>>& inputs,
             const std::vector<int>& labels) {
              const EvalResult ev = evaluate(net, dataset_from_py(inputs, labels, 0));
              return py::make_tuple(ev.accuracy, ev.mean_loss);
          },
          py::arg("net"), py::arg("inputs"), py::arg("labels"));

    m.def("forward",
          [](const Network& net, const std::vector<std::vector<double>>& inputs) {
              return mat_to_rows(forward(net, mat_from_rows(inputs)).logits());
          },
          py::arg("net"), py::arg("inputs"));

    m.def("mutual_information", &mutual_information, py::arg("cov"), py::arg("a"), py::arg("b"));
    m.def("conditional_mi", &conditional_mi, py::arg("cov"), py::arg("a"), py::arg("b"),
          py::arg("z"));
    m.def("gaussian_entropy", &gaussian_entropy, py::arg("cov"), py::arg("set"));

    m.def("select_exact", &select_exact, py::arg("cov"), py::arg("upper_set"), py::arg("k"));
    m.def("select_mrmr", &select_mrmr, py::arg("cov"), py::arg("upper_set"), py::arg("k"),
          py::arg("alpha") = 0.4, py::arg("beta") = 0.0);

    m.def("collect_covariances",
          [](const Network& net, const std::vector<std::vector<double>>& inputs,
             const std::vector<int>& labels, std::size_t sample_cap, std::uint64_t seed,
             double ridge_scale) {
              const Dataset d = dataset_from_py(inputs, labels, 0);
              std::vector<CovarianceModel> covs;
              for (const auto& p : collect(net, d, nullptr, sample_cap, seed))
                  covs.push_back(finalize(p, ridge_scale));
              return covs;
          },
          py::arg("net"), py::arg("inputs"), py::arg("labels"), py::arg("sample_cap") = 100000,
          py::arg("seed") = 0, py::arg("ridge_scale") = 1e-6);

    m.def("layerwise_prune",
          [](const Network& net, const std::vector<CovarianceModel>& covs, double keep,
             const std::string& schedule, const std::string& mode, double alpha, double beta) {
              SelectorConfig sel;
              sel.mode = selector_mode_from_string(mode);
              sel.alpha = alpha;
              sel.beta = beta;
              const SparsitySchedule sched =
                  make_schedule(schedule_shape_from_string(schedule), keep, net.depth());
              return layerwise_prune(net, covs, sched, sel).masks;
          },
          py::arg("net"), py::arg("covs"), py::arg("keep"), py::arg("schedule") = "uniform",
          py::arg("mode") = "mrmr", py::arg("alpha") = 0.4, py::arg("beta") = 0.0);

    m.def("squeeze", &squeeze, py::arg("net"), py::arg("masks"));

    m.def("count_flops",
          [](const Network& net) { return count_flops(net).total(); }, py::arg("net"));

    m.def("magnitude_prune",
          [](const Network& net, double sparsity, bool per_layer) {
              const WeightMaskSet wm = magnitude_prune(net, sparsity, per_layer);
              return py::make_tuple(wm.masks, wm.achieved_sparsity);
          },
          py::arg("net"), py::arg("sparsity"), py::arg("per_layer") = false);

    m.def("save_model",
          [](const Network& net, const std::string& path) { save_model(net, path); },
          py::arg("net"), py::arg("path"));
    m.def("load_model",
          [](const std::string& path) { return load_model(path).net; }, py::arg("path"));

    m.def("gen_data",
          [](const std::string& generator, std::size_t dims, int classes, std::size_t samples,
             std::uint64_t seed, std::size_t relevant_dims, double noise) {
              GenSpec spec;
              spec.generator = generator;
              spec.dims = dims;
              spec.classes = classes;
              spec.train_samples = samples;
              spec.relevant_dims = relevant_dims;
              spec.noise = noise;
              const GeneratedData d = gen_data(spec, seed);
              return py::make_tuple(mat_to_rows(d.train.inputs), d.train.labels, d.planted);
          },
          py::arg("generator"), py::arg("dims"), py::arg("classes") = 0,
          py::arg("samples") = 2000, py::arg("seed") = 1, py::arg("relevant_dims") = 4,
          py::arg("noise") = 0.1);

    py::register_exception<TrainingDiverged>(m, "TrainingDiverged");
    py::register_exception<ModelIoError>(m, "ModelIoError");
}
