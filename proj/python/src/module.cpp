// Python bindings. Images are 2-D float arrays indexed [row, column].

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dsfs/benchmark.hpp"
#include "dsfs/capture_metrics.hpp"
#include "dsfs/decomposition.hpp"
#include "dsfs/delaunay.hpp"
#include "dsfs/error.hpp"
#include "dsfs/evaluation.hpp"
#include "dsfs/exemplar_selection.hpp"
#include "dsfs/render.hpp"
#include "dsfs/shape_model.hpp"
#include "dsfs/sparse_classifier.hpp"

namespace py = pybind11;
using namespace dsfs;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

GrayImage to_image(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D image array");
    const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
    return GrayImage(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_image(const GrayImage& img) {
    Array out({img.height(), img.width()});
    std::copy(img.data().begin(), img.data().end(), out.mutable_data());
    return out;
}

metrics::MetricConfig metric_config(std::size_t window, double k) {
    metrics::MetricConfig cfg;
    cfg.window = window;
    cfg.k_l = cfg.k_c = k;
    return cfg;
}

cluster::SimilarityMatrix to_similarity(const Eigen::MatrixXd& s) {
    if (s.rows() != s.cols()) throw py::value_error("similarity matrix must be square");
    cluster::SimilarityMatrix m(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index i = 0; i < s.rows(); ++i)
        for (Eigen::Index k = 0; k < s.cols(); ++k) m(i, k) = s(i, k);
    return m;
}

// Rows: pitch, yaw, roll, luminance, contrast.
std::vector<metrics::ConditionVector> to_conditions(const Eigen::MatrixXd& c) {
    if (c.cols() != 5) throw py::value_error("conditions must have 5 columns: pitch, yaw, roll, luminance, contrast");
    std::vector<metrics::ConditionVector> out(static_cast<std::size_t>(c.rows()));
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        auto& v = out[static_cast<std::size_t>(i)];
        v.pose = {c(i, 0), c(i, 1), c(i, 2)};
        v.luminance = c(i, 3);
        v.contrast = c(i, 4);
    }
    return out;
}

sparse::CrossDomainDictionary to_dictionary(const Eigen::MatrixXd& columns, const std::vector<double>& weights,
                                            std::size_t classes) {
    if (classes == 0 || columns.cols() % static_cast<Eigen::Index>(classes) != 0)
        throw py::value_error("column count must be a multiple of the class count");
    sparse::CrossDomainDictionary d;
    d.columns = columns;
    for (Eigen::Index j = 0; j < d.columns.cols(); ++j) d.columns.col(j).normalize();
    d.column_weights = weights.empty() ? std::vector<double>(static_cast<std::size_t>(columns.cols()), 1.0) : weights;
    d.q = static_cast<std::size_t>(columns.cols()) / classes - 1;
    for (std::size_t i = 0; i < classes; ++i) d.class_ids.push_back(std::to_string(i));
    d.width = 1;
    d.height = static_cast<std::size_t>(columns.rows());
    d.validate();
    return d;
}

py::dict summary_dict(const eval::CurveSummary& s) {
    py::dict d;
    d["auc"] = s.auc;
    d["pauc"] = s.pauc;
    d["pauc_normalized"] = s.pauc_normalized;
    d["aupr"] = s.aupr;
    std::vector<std::pair<double, double>> roc, pr;
    for (const auto& p : s.roc) roc.emplace_back(p.x, p.y);
    for (const auto& p : s.pr) pr.emplace_back(p.x, p.y);
    d["roc"] = roc;
    d["pr"] = pr;
    return d;
}

}  // namespace

PYBIND11_MODULE(_dsfs, m) {
    m.doc() = "Domain-specific face synthesis: capture metrics, exemplar selection, synthesis, sparse classification";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

    m.def("glq", [](const Array& r, const Array& g, std::size_t window, double k_l) {
        return metrics::glq(to_image(r), to_image(g), metric_config(window, k_l));
    }, py::arg("r"), py::arg("g"), py::arg("window") = 8, py::arg("k_l") = 0.01);
    m.def("gcq", [](const Array& r, const Array& g, std::size_t window, double k_c) {
        return metrics::gcq(to_image(r), to_image(g), metric_config(window, k_c));
    }, py::arg("r"), py::arg("g"), py::arg("window") = 8, py::arg("k_c") = 0.03);

    m.def("ap_cluster", [](const Eigen::MatrixXd& s, std::optional<double> preference) {
        cluster::ApConfig cfg;
        cfg.preference = preference;
        const auto res = cluster::ap_cluster(to_similarity(s), cfg);
        py::dict d;
        d["exemplars"] = res.exemplar_indices;
        d["assignment"] = res.assignment;
        d["converged"] = res.converged;
        d["iterations"] = res.iterations_run;
        return d;
    }, py::arg("similarity"), py::arg("preference") = py::none(),
       "Affinity propagation on a dense similarity matrix; the diagonal is replaced by the preference "
       "(median off-diagonal value when None).");
    m.def("net_similarity", [](const Eigen::MatrixXd& s, const std::vector<std::size_t>& assignment, double pref) {
        return cluster::net_similarity(to_similarity(s), assignment, pref);
    });

    m.def("two_step_select", [](const Eigen::MatrixXd& conditions) {
        const auto set = cluster::two_step_select(to_conditions(conditions));
        std::vector<std::size_t> rois, pose_rois, sizes;
        for (const auto& e : set.exemplars) {
            rois.push_back(e.roi_index);
            pose_rois.push_back(e.pose_roi_index);
            sizes.push_back(e.cluster_size);
        }
        py::dict d;
        d["roi_index"] = rois;
        d["pose_roi_index"] = pose_rois;
        d["cluster_size"] = sizes;
        d["weights"] = set.weights;
        d["pose_cluster_of"] = set.pose_cluster_of;
        d["pose_cluster_of_roi"] = set.pose_cluster_of_roi;
        d["pose_clusters"] = set.pose_cluster_count;
        return d;
    }, py::arg("conditions"), "Rows of (pitch, yaw, roll, luminance, contrast).");

    m.def("decompose", [](const Array& img, double shading_sigma, double texture_sigma) {
        synth::DecompositionConfig cfg;
        cfg.shading_sigma = shading_sigma;
        cfg.texture_sigma = texture_sigma;
        const auto d = synth::decompose(to_image(img), cfg);
        return py::make_tuple(from_image(d.shading), from_image(d.material), from_image(d.texture));
    }, py::arg("image"), py::arg("shading_sigma") = 12.0, py::arg("texture_sigma") = 2.0,
       "Returns (shading, material, texture); their product reconstructs the image.");

    m.def("delaunay", [](const Eigen::MatrixXd& pts) {
        if (pts.cols() != 2) throw py::value_error("points must be n x 2");
        std::vector<Point2> p;
        for (Eigen::Index i = 0; i < pts.rows(); ++i) p.push_back({pts(i, 0), pts(i, 1)});
        return synth::delaunay(p);
    });
    m.def("rotation_matrix", [](double pitch, double yaw, double roll) {
        return Eigen::Matrix3d(synth::rotation_matrix({pitch, yaw, roll}));
    }, "Degrees.");

    m.def("sci_from_masses", &sparse::sci_from_masses);
    m.def("solve", [](const Eigen::MatrixXd& columns, const Eigen::VectorXd& y, std::size_t classes,
                      const std::vector<double>& weights, double lam, bool equality, double tau) {
        const auto dict = to_dictionary(columns, weights, classes);
        sparse::SolverConfig cfg;
        cfg.lambda = lam;
        if (equality) cfg.mode = sparse::SolverMode::equality;
        const auto sol = sparse::solve_weighted_block_l1(dict, y.normalized(), cfg);
        const auto dec = sparse::decide(sol, dict, tau);
        py::dict d;
        d["x"] = sol.x;
        d["residuals"] = sol.residuals;
        d["sci"] = sol.sci;
        d["label"] = dec.class_index;
        d["accepted"] = dec.accepted;
        d["converged"] = sol.converged;
        d["iterations"] = sol.iterations;
        return d;
    }, py::arg("columns"), py::arg("y"), py::arg("classes"), py::arg("weights") = std::vector<double>{},
       py::arg("lam") = 0.005, py::arg("equality") = false, py::arg("tau") = 0.3,
       "Block-sparse coding of y over equal-width class blocks of `columns` (normalised to unit length).");

    m.def("dsq", &eval::dsq);
    m.def("roc_metrics", [](const std::vector<double>& scores, const std::vector<bool>& labels, double cutoff) {
        if (scores.size() != labels.size()) throw py::value_error("scores and labels differ in length");
        std::vector<eval::ScoredTrial> t;
        for (std::size_t i = 0; i < scores.size(); ++i) t.push_back({scores[i], labels[i]});
        return summary_dict(eval::roc_metrics(t, cutoff));
    }, py::arg("scores"), py::arg("labels"), py::arg("pauc_cutoff") = 0.1);

    m.def("run_benchmark", [](std::uint64_t seed, std::size_t replications) {
        bench::BenchmarkConfig cfg;
        cfg.seed = seed;
        cfg.replications = replications;
        const auto rep = bench::run_benchmark(cfg, synth::procedural_head());
        py::list rows;
        for (const auto& r : rep.replications) {
            py::dict d;
            d["q"] = r.q;
            d["baseline_auc"] = r.baseline.mean_auc;
            d["augmented_auc"] = r.augmented.mean_auc;
            d["baseline_dsq"] = r.baseline.dsq;
            d["augmented_dsq"] = r.augmented.dsq;
            rows.append(d);
        }
        py::dict out;
        out["replications"] = rows;
        out["mean_auc_baseline"] = rep.mean_auc_baseline;
        out["mean_auc_augmented"] = rep.mean_auc_augmented;
        return out;
    }, py::arg("seed") = 1, py::arg("replications") = 5);
}
