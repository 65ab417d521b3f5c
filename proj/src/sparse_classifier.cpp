#include "dsfs/sparse_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/QR>

#include "binary_io.hpp"
#include "dsfs/error.hpp"
#include "dsfs/image_io.hpp"

namespace dsfs::sparse {

namespace {

constexpr char kDictMagic[8] = {'D', 'S', 'F', 'S', 'D', 'I', 'C', '1'};

Eigen::VectorXd to_column(const GrayImage& img) {
    const auto v = vectorize_column_major(img);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void CrossDomainDictionary::validate() const {
    const std::size_t n_c = class_count() * block_width();
    if (class_count() == 0) throw DataError("dictionary: no classes");
    if (static_cast<std::size_t>(columns.cols()) != n_c) throw DataError("dictionary: column count is not n(q+1)");
    if (column_weights.size() != n_c) throw DataError("dictionary: one weight per column required");
    if (rows() != width * height) throw DataError("dictionary: row count does not match image geometry");
    for (double w : column_weights)
        if (!(w > 0.0) || !std::isfinite(w)) throw DataError("dictionary: column weights must be positive");
}

std::vector<double> synthetic_column_weights(const std::vector<double>& exemplar_weights, bool invert) {
    if (!invert || exemplar_weights.empty()) return exemplar_weights;
    const auto [lo, hi] = std::minmax_element(exemplar_weights.begin(), exemplar_weights.end());
    std::vector<double> out;
    for (double w : exemplar_weights) out.push_back(*hi + *lo - w);
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& w : out) w /= sum;
    return out;
}

CrossDomainDictionary build_cross_domain_dictionary(const std::vector<RoiRecord>& stills,
                                                    const std::vector<synth::SyntheticSet>& synthetic,
                                                    const std::vector<double>& weights,
                                                    const DictionaryConfig& cfg) {
    if (stills.empty()) throw DataError("dictionary: no stills");
    if (!(cfg.still_weight > 0.0)) throw ConfigError("dictionary: still weight must be positive");
    const std::size_t q = synthetic.empty() ? 0 : weights.size();
    if (!synthetic.empty() && synthetic.size() != stills.size())
        throw DataError("dictionary: one synthetic set per still required");
    const auto syn_w = synthetic_column_weights(weights, cfg.invert_weights);
    for (double w : syn_w)
        if (!(w > 0.0)) throw DataError("dictionary: zero exemplar weight");

    CrossDomainDictionary d;
    d.q = q;
    d.width = stills.front().image.width();
    d.height = stills.front().image.height();
    const std::size_t n = stills.size();
    d.columns.resize(static_cast<Eigen::Index>(d.width * d.height), static_cast<Eigen::Index>(n * (q + 1)));
    auto place = [&](std::size_t col, const GrayImage& img) {
        if (img.width() != d.width || img.height() != d.height)
            throw DataError("dictionary: image size differs from the first still");
        Eigen::VectorXd v = to_column(img);
        const double norm = v.norm();
        if (norm == 0.0) throw DataError("dictionary: zero image cannot be normalised");
        d.columns.col(static_cast<Eigen::Index>(col)) = v / norm;
    };
    for (std::size_t i = 0; i < n; ++i) {
        d.class_ids.push_back(stills[i].subject_id);
        place(i * (q + 1), stills[i].image);
        d.column_weights.push_back(cfg.still_weight);
        if (q == 0) continue;
        const auto& set = synthetic[i];
        if (set.size() != q) throw DataError("dictionary: inconsistent q for subject " + stills[i].subject_id);
        if (!set.subject_id.empty() && set.subject_id != stills[i].subject_id)
            throw DataError("dictionary: synthetic set " + set.subject_id + " does not match still " +
                            stills[i].subject_id);
        for (std::size_t j = 0; j < q; ++j) {
            place(i * (q + 1) + 1 + j, set.rois[j]);
            d.column_weights.push_back(syn_w[j]);
        }
    }
    d.validate();
    return d;
}

Eigen::VectorXd probe_vector(const GrayImage& img, const CrossDomainDictionary& dict) {
    const GrayImage sized =
        (img.width() == dict.width && img.height() == dict.height) ? img : resample(img, dict.width, dict.height);
    Eigen::VectorXd v = to_column(sized);
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

void write_dictionary(const std::filesystem::path& path, const CrossDomainDictionary& dict) {
    dict.validate();
    std::string out(kDictMagic, sizeof(kDictMagic));
    bin::put<std::uint64_t>(out, dict.rows());
    bin::put<std::uint64_t>(out, dict.class_count());
    bin::put<std::uint64_t>(out, dict.q);
    bin::put<std::uint64_t>(out, dict.width);
    bin::put<std::uint64_t>(out, dict.height);
    for (Eigen::Index c = 0; c < dict.columns.cols(); ++c)
        for (Eigen::Index r = 0; r < dict.columns.rows(); ++r) bin::put(out, dict.columns(r, c));
    for (double w : dict.column_weights) bin::put(out, w);
    for (const auto& id : dict.class_ids) {
        bin::put<std::uint64_t>(out, id.size());
        out += id;
    }
    io::write_file_atomic(path, out);
}

CrossDomainDictionary read_dictionary(const std::filesystem::path& path) {
    const std::string in = bin::slurp(path);
    if (in.size() < sizeof(kDictMagic) || std::memcmp(in.data(), kDictMagic, sizeof(kDictMagic)) != 0)
        throw DataError(path.string() + ": not a dictionary container");
    std::size_t pos = sizeof(kDictMagic);
    CrossDomainDictionary d;
    const auto d2 = bin::take<std::uint64_t>(in, pos);
    const auto n = bin::take<std::uint64_t>(in, pos);
    d.q = bin::take<std::uint64_t>(in, pos);
    d.width = bin::take<std::uint64_t>(in, pos);
    d.height = bin::take<std::uint64_t>(in, pos);
    const std::size_t n_c = n * (d.q + 1);
    if (in.size() < pos + 8 * (d2 * n_c + n_c)) throw DataError(path.string() + ": truncated dictionary");
    d.columns.resize(static_cast<Eigen::Index>(d2), static_cast<Eigen::Index>(n_c));
    for (Eigen::Index c = 0; c < d.columns.cols(); ++c)
        for (Eigen::Index r = 0; r < d.columns.rows(); ++r) d.columns(r, c) = bin::take<double>(in, pos);
    d.column_weights.resize(n_c);
    for (double& w : d.column_weights) w = bin::take<double>(in, pos);
    for (std::size_t i = 0; i < n; ++i) {
        const auto len = bin::take<std::uint64_t>(in, pos);
        if (pos + len > in.size()) throw DataError(path.string() + ": truncated class id");
        d.class_ids.emplace_back(in.substr(pos, len));
        pos += len;
    }
    if (pos != in.size()) throw DataError(path.string() + ": trailing bytes in dictionary");
    d.validate();
    return d;
}

void SolverConfig::validate() const {
    if (!(lambda > 0.0)) throw ConfigError("solver: lambda must be positive");
    if (!(rho > 0.0)) throw ConfigError("solver: rho must be positive");
    if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) throw ConfigError("solver: tolerances must be positive");
    if (max_iter == 0) throw ConfigError("solver: max_iter must be at least 1");
}

Eigen::VectorXd group_prox(const Eigen::VectorXd& v, double kappa) {
    const double norm = v.norm();
    if (norm <= kappa) return Eigen::VectorXd::Zero(v.size());
    return (1.0 - kappa / norm) * v;
}

double sci_from_masses(const std::vector<double>& block_l1) {
    const std::size_t n = block_l1.size();
    if (n < 2) throw DataError("sci: needs at least two classes");
    const double total = std::accumulate(block_l1.begin(), block_l1.end(), 0.0);
    if (!(total > 0.0)) return 0.0;
    const double top = *std::max_element(block_l1.begin(), block_l1.end());
    const double nn = static_cast<double>(n);
    return std::clamp((nn * top / total - 1.0) / (nn - 1.0), 0.0, 1.0);
}

double sci(const Eigen::VectorXd& x, std::size_t n) {
    if (n < 2) throw DataError("sci: needs at least two classes");
    if (static_cast<std::size_t>(x.size()) % n != 0) throw DataError("sci: length is not a multiple of n");
    const Eigen::Index w = x.size() / static_cast<Eigen::Index>(n);
    std::vector<double> mass;
    for (std::size_t i = 0; i < n; ++i) mass.push_back(x.segment(static_cast<Eigen::Index>(i) * w, w).lpNorm<1>());
    return sci_from_masses(mass);
}

double objective(const CrossDomainDictionary& dict, const Eigen::VectorXd& y, const Eigen::VectorXd& x, double lambda) {
    const Eigen::Index bw = static_cast<Eigen::Index>(dict.block_width());
    double pen = 0.0;
    for (std::size_t i = 0; i < dict.class_count(); ++i) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < bw; ++k) {
            const Eigen::Index c = static_cast<Eigen::Index>(i) * bw + k;
            const double v = dict.column_weights[static_cast<std::size_t>(c)] * x(c);
            s += v * v;
        }
        pen += std::sqrt(s);
    }
    return 0.5 * (y - dict.columns * x).squaredNorm() + lambda * pen;
}

BlockSparseSolver::BlockSparseSolver(const CrossDomainDictionary& dict, const SolverConfig& cfg)
    : dict_(dict), cfg_(cfg) {
    cfg_.validate();
    dict_.validate();
    const Eigen::Index n_c = dict_.columns.cols();
    inv_w_.resize(n_c);
    for (Eigen::Index c = 0; c < n_c; ++c) inv_w_(c) = 1.0 / dict_.column_weights[static_cast<std::size_t>(c)];
    scaled_ = dict_.columns * inv_w_.asDiagonal();
    if (cfg_.mode == SolverMode::penalized) {
        dtd_ = scaled_.transpose() * scaled_;
        Eigen::MatrixXd gram = dtd_;
        gram.diagonal().array() += cfg_.rho;
        gram_.compute(gram);
        if (gram_.info() != Eigen::Success) throw DataError("solver: Gram factorisation failed");
    } else {
        pinv_ = scaled_.completeOrthogonalDecomposition().pseudoInverse();
    }
}

SparseSolution BlockSparseSolver::solve(const Eigen::VectorXd& y) const {
    if (static_cast<std::size_t>(y.size()) != dict_.rows())
        throw DataError("solver: probe length " + std::to_string(y.size()) + " does not match dictionary rows " +
                        std::to_string(dict_.rows()));
    const Eigen::Index n_c = scaled_.cols();
    const Eigen::Index bw = static_cast<Eigen::Index>(dict_.block_width());
    const std::size_t n = dict_.class_count();
    double rho = cfg_.rho;
    std::size_t rho_updates = 0;
    Eigen::LLT<Eigen::MatrixXd> refactored;
    const Eigen::LLT<Eigen::MatrixXd>* llt = &gram_;

    // Split variable u carries the data term, z the group penalty, s the scaled dual.
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n_c), z = Eigen::VectorXd::Zero(n_c), s = Eigen::VectorXd::Zero(n_c);
    Eigen::VectorXd dty, feasible_shift;
    if (cfg_.mode == SolverMode::penalized) {
        dty = scaled_.transpose() * y;
    } else {
        // Projection onto {u : D'^T D' u = D'^T y}: v - P (D' v - y).
        feasible_shift = pinv_ * y;
    }

    SparseSolution sol;
    Eigen::VectorXd z_prev;
    for (std::size_t it = 0; it < cfg_.max_iter; ++it) {
        const Eigen::VectorXd v = z - s;
        if (cfg_.mode == SolverMode::penalized)
            u = llt->solve(dty + rho * v);
        else
            u = v - pinv_ * (scaled_ * v) + feasible_shift;
        z_prev = z;
        const Eigen::VectorXd w = u + s;
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Index b = static_cast<Eigen::Index>(i) * bw;
            z.segment(b, bw) = group_prox(w.segment(b, bw), cfg_.lambda / rho);
        }
        s += u - z;
        sol.iterations = it + 1;
        if (cfg_.record_objective) {
            const Eigen::VectorXd& zz = cfg_.mode == SolverMode::penalized ? z : u;
            double pen = 0.0;
            for (std::size_t i = 0; i < n; ++i) pen += zz.segment(static_cast<Eigen::Index>(i) * bw, bw).norm();
            const double data = cfg_.mode == SolverMode::penalized ? 0.5 * (y - scaled_ * zz).squaredNorm() : 0.0;
            sol.objective_trace.push_back(data + cfg_.lambda * pen);
        }
        const double primal = (u - z).norm();
        const double dual = rho * (z - z_prev).norm();
        if (primal < cfg_.tol_primal && dual < cfg_.tol_dual) {
            sol.converged = true;
            break;
        }
        if (cfg_.adaptive_rho && rho_updates < cfg_.max_rho_updates && (primal > 10.0 * dual || dual > 10.0 * primal)) {
            const double factor = primal > dual ? 2.0 : 0.5;
            rho *= factor;
            s /= factor;  // scaled dual tracks 1 / rho
            ++rho_updates;
            if (cfg_.mode == SolverMode::penalized) {
                Eigen::MatrixXd gram = dtd_;
                gram.diagonal().array() += rho;
                refactored.compute(gram);
                llt = &refactored;
            }
        }
    }

    // Penalised mode reports the sparse prox iterate; equality mode the
    // feasible one, so the constraint holds exactly.
    const Eigen::VectorXd& zf = cfg_.mode == SolverMode::penalized ? z : u;
    sol.x = inv_w_.cwiseProduct(zf);
    std::vector<double> mass;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index b = static_cast<Eigen::Index>(i) * bw;
        const auto xi = sol.x.segment(b, bw);
        sol.block_norms.push_back(xi.norm());
        mass.push_back(xi.lpNorm<1>());
        sol.residuals.push_back((y - dict_.columns.middleCols(b, bw) * xi).norm());
    }
    sol.sci = n >= 2 ? sci_from_masses(mass) : (mass[0] > 0.0 ? 1.0 : 0.0);
    return sol;
}

SparseSolution solve_weighted_block_l1(const CrossDomainDictionary& dict, const Eigen::VectorXd& y,
                                       const SolverConfig& cfg) {
    return BlockSparseSolver(dict, cfg).solve(y);
}

std::size_t classify(const SparseSolution& sol) {
    if (sol.residuals.empty()) throw DataError("classify: empty solution");
    std::size_t best = 0;
    for (std::size_t i = 1; i < sol.residuals.size(); ++i)
        if (sol.residuals[i] < sol.residuals[best]) best = i;
    return best;
}

Decision decide(const SparseSolution& sol, const CrossDomainDictionary& dict, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
    Decision d;
    d.class_index = classify(sol);
    d.class_id = dict.class_ids.at(d.class_index);
    d.sci = sol.sci;
    d.accepted = sol.sci >= tau;
    d.converged = sol.converged;
    for (std::size_t i = 0; i < sol.residuals.size(); ++i) d.residual_ranking.emplace_back(i, sol.residuals[i]);
    std::stable_sort(d.residual_ranking.begin(), d.residual_ranking.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    return d;
}

Decision recognize(const GrayImage& probe, const BlockSparseSolver& solver, double tau) {
    const auto& dict = solver.dictionary();
    return decide(solver.solve(probe_vector(probe, dict)), dict, tau);
}

}  // namespace dsfs::sparse
