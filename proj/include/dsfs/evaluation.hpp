#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dsfs::eval {

/// ||A^T B||_F after l2-normalising the columns of both. Higher means less
/// domain shift. Shapes must match.
double dsq(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& other);

struct ScoredTrial {
    double score = 0.0;  // higher = more target-like
    bool is_target = false;
};

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
};

struct CurveSummary {
    std::vector<CurvePoint> roc;  // (fpr, tpr), from (0, 0) to (1, 1)
    std::vector<CurvePoint> pr;   // (recall, precision) per threshold
    double auc = 0.0;
    double pauc = 0.0;             // raw area over 0 < fpr <= cutoff
    double pauc_normalized = 0.0;  // pauc / cutoff
    double pauc_cutoff = 0.1;
    double aupr = 0.0;
    std::size_t targets = 0;
    std::size_t nontargets = 0;
};

/// Threshold sweep over distinct scores. Tied scores move together, giving
/// the half-credit convention of pair counting. AUPR is the step sum of
/// precision times recall increments.
CurveSummary roc_metrics(const std::vector<ScoredTrial>& trials, double pauc_cutoff = 0.1);

struct NamedCurve {
    std::string label;
    const CurveSummary* curve = nullptr;
};

/// Static side-by-side ROC and precision-recall plot.
std::string curves_svg(const std::vector<NamedCurve>& curves, const std::string& title);
void write_curves_svg(const std::filesystem::path& path, const std::vector<NamedCurve>& curves,
                      const std::string& title);

}  // namespace dsfs::eval
