#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dsfs/image.hpp"
#include "dsfs/synthesis.hpp"

namespace dsfs::sparse {

struct DictionaryConfig {
    double still_weight = 1.0;
    /// Flip the exemplar weights (w <- max + min - w, renormalised to sum 1)
    /// so that large clusters are penalised less instead of more.
    bool invert_weights = false;
};

/// Columns grouped in per-class blocks [still | q synthetic ROIs], every
/// column unit-norm. Column-major vectorisation of width x height images.
struct CrossDomainDictionary {
    Eigen::MatrixXd columns;               // d^2 x n(q+1)
    std::vector<std::string> class_ids;    // n
    std::vector<double> column_weights;    // n(q+1), all > 0
    std::size_t q = 0;
    std::size_t width = 0;
    std::size_t height = 0;

    std::size_t class_count() const noexcept { return class_ids.size(); }
    std::size_t block_width() const noexcept { return q + 1; }
    std::size_t block_begin(std::size_t cls) const noexcept { return cls * block_width(); }
    std::size_t rows() const noexcept { return static_cast<std::size_t>(columns.rows()); }
    /// Throws DataError when the invariants above do not hold.
    void validate() const;
};

/// Exemplar weights after the optional inversion; the still weight is not included.
std::vector<double> synthetic_column_weights(const std::vector<double>& exemplar_weights, bool invert);

/// `synthetic` may be empty (baseline, q = 0); otherwise one set per still, in
/// the same subject order, all with the same q = weights.size().
CrossDomainDictionary build_cross_domain_dictionary(const std::vector<RoiRecord>& stills,
                                                    const std::vector<synth::SyntheticSet>& synthetic,
                                                    const std::vector<double>& weights,
                                                    const DictionaryConfig& cfg = {});

/// Resamples to the dictionary geometry when needed, vectorises column-major
/// and normalises to unit length. A zero image stays zero.
Eigen::VectorXd probe_vector(const GrayImage& img, const CrossDomainDictionary& dict);

// Binary container, little-endian:
//   magic "DSFSDIC1", u64 d2, u64 n, u64 q, u64 width, u64 height,
//   f64[n(q+1)][d2] columns (column by column), f64[n(q+1)] weights,
//   n x (u64 length, bytes) class ids
void write_dictionary(const std::filesystem::path& path, const CrossDomainDictionary& dict);
CrossDomainDictionary read_dictionary(const std::filesystem::path& path);

enum class SolverMode {
    penalized,  // min 1/2 ||y - Dx||^2 + lambda sum_i ||W_i x_i||
    equality,   // min lambda sum_i ||W_i x_i|| over the least-squares solutions of Dx = y
};

struct SolverConfig {
    double lambda = 0.005;
    double rho = 1.0;
    double tol_primal = 1e-6;
    double tol_dual = 1e-6;
    std::size_t max_iter = 1000;
    SolverMode mode = SolverMode::penalized;
    /// Residual balancing: rho is doubled or halved while one residual exceeds
    /// the other tenfold, at most `max_rho_updates` times per solve, then held.
    bool adaptive_rho = true;
    std::size_t max_rho_updates = 32;
    bool record_objective = false;
    /// Throws ConfigError on non-positive lambda, rho or tolerances.
    void validate() const;
};

struct SparseSolution {
    Eigen::VectorXd x;                 // per column, x = W^{-1} z
    std::vector<double> block_norms;   // ||x_i||_2
    std::vector<double> residuals;     // ||y - D_i x_i||_2
    double sci = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // per cycle, if requested
};

/// Block soft threshold: max(0, 1 - kappa / ||v||) v.
Eigen::VectorXd group_prox(const Eigen::VectorXd& v, double kappa);

/// Sparsity concentration index from per-block l1 masses, clamped to [0, 1];
/// zero total mass gives 0.
double sci_from_masses(const std::vector<double>& block_l1);
/// x split into n equal blocks.
double sci(const Eigen::VectorXd& x, std::size_t n);

/// Objective of the penalised problem in x coordinates.
double objective(const CrossDomainDictionary& dict, const Eigen::VectorXd& y, const Eigen::VectorXd& x, double lambda);

/// ADMM in z = W x coordinates with the factorisation of D'^T D' + rho I (or
/// the pseudo-inverse of D' in equality mode) computed once and reused for
/// every probe; a rho update refactors a local copy. Holds its own copy of the dictionary; solve() is const and
/// safe to call concurrently.
class BlockSparseSolver {
public:
    BlockSparseSolver(const CrossDomainDictionary& dict, const SolverConfig& cfg = {});
    SparseSolution solve(const Eigen::VectorXd& y) const;
    const CrossDomainDictionary& dictionary() const noexcept { return dict_; }
    const SolverConfig& config() const noexcept { return cfg_; }

private:
    CrossDomainDictionary dict_;
    SolverConfig cfg_;
    Eigen::MatrixXd scaled_;  // D' = D W^{-1}
    Eigen::MatrixXd dtd_;     // D'^T D' 
    Eigen::VectorXd inv_w_;
    Eigen::LLT<Eigen::MatrixXd> gram_;
    Eigen::MatrixXd pinv_;
};

SparseSolution solve_weighted_block_l1(const CrossDomainDictionary& dict, const Eigen::VectorXd& y,
                                       const SolverConfig& cfg = {});

/// argmin_i ||y - D_i x_i||, lowest index on ties.
std::size_t classify(const SparseSolution& sol);

struct Decision {
    bool accepted = false;
    std::size_t class_index = 0;   // best class by residual, also reported when rejected
    std::string class_id;
    double sci = 0.0;
    std::vector<std::pair<std::size_t, double>> residual_ranking;  // ascending residual
    bool converged = true;
};

/// Accepts when SCI >= tau (tau in [0, 1]).
Decision decide(const SparseSolution& sol, const CrossDomainDictionary& dict, double tau);
Decision recognize(const GrayImage& probe, const BlockSparseSolver& solver, double tau);

}  // namespace dsfs::sparse
