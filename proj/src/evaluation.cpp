#include "dsfs/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dsfs/error.hpp"
#include "dsfs/image_io.hpp"

namespace dsfs::eval {

double dsq(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& other) {
    if (reference.rows() != other.rows() || reference.cols() != other.cols())
        throw DataError("dsq: dictionaries must have the same shape");
    auto normalized = [](const Eigen::MatrixXd& m) {
        Eigen::MatrixXd out = m;
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            const double n = out.col(c).norm();
            if (n > 0.0) out.col(c) /= n;
        }
        return out;
    };
    return (normalized(reference).transpose() * normalized(other)).norm();
}

CurveSummary roc_metrics(const std::vector<ScoredTrial>& trials, double pauc_cutoff) {
    if (!(pauc_cutoff > 0.0 && pauc_cutoff <= 1.0)) throw ConfigError("pauc cutoff must lie in (0, 1]");
    CurveSummary s;
    s.pauc_cutoff = pauc_cutoff;
    for (const auto& t : trials) {
        if (!std::isfinite(t.score)) throw DataError("roc_metrics: non-finite score");
        (t.is_target ? s.targets : s.nontargets)++;
    }
    if (s.targets == 0 || s.nontargets == 0) throw DataError("roc_metrics: need both target and non-target trials");

    std::vector<ScoredTrial> sorted = trials;
    std::sort(sorted.begin(), sorted.end(), [](const ScoredTrial& a, const ScoredTrial& b) { return a.score > b.score; });
    const double p = static_cast<double>(s.targets), n = static_cast<double>(s.nontargets);
    std::size_t tp = 0, fp = 0;
    s.roc.push_back({0.0, 0.0});
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            (sorted[j].is_target ? tp : fp)++;
            ++j;
        }
        const CurvePoint& last = s.roc.back();
        const CurvePoint next{static_cast<double>(fp) / n, static_cast<double>(tp) / p};
        s.auc += (next.x - last.x) * (next.y + last.y) / 2.0;
        if (last.x < pauc_cutoff) {
            const double x_end = std::min(next.x, pauc_cutoff);
            const double y_end =
                next.x > last.x ? last.y + (next.y - last.y) * (x_end - last.x) / (next.x - last.x) : next.y;
            s.pauc += (x_end - last.x) * (last.y + y_end) / 2.0;
        }
        s.roc.push_back(next);
        const double recall = static_cast<double>(tp) / p;
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        s.pr.push_back({recall, precision});
        s.aupr += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    s.pauc_normalized = s.pauc / pauc_cutoff;
    return s;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

void panel(std::ostringstream& out, double ox, const std::string& xlabel, const std::string& ylabel,
           const std::vector<NamedCurve>& curves, bool pr) {
    const double size = 300.0, top = 40.0;
    out << "<g transform=\"translate(" << ox << "," << top << ")\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 1; k < 5; ++k) {
        const double t = size * k / 5.0;
        out << "<line x1=\"" << t << "\" y1=\"0\" x2=\"" << t << "\" y2=\"" << size << "\" stroke=\"#ddd\"/>"
            << "<line x1=\"0\" y1=\"" << t << "\" x2=\"" << size << "\" y2=\"" << t << "\" stroke=\"#ddd\"/>\n";
    }
    out << "<text x=\"" << size / 2 << "\" y=\"" << size + 30 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    out << "<text x=\"-35\" y=\"" << size / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 -35 " << size / 2
        << ")\">" << ylabel << "</text>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& pts = pr ? curves[c].curve->pr : curves[c].curve->roc;
        out << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << kPalette[c % 6] << "\" points=\"";
        double prev_x = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pr) {  // step plot: precision holds until the next recall level
                out << prev_x * size << "," << (1 - pts[i].y) * size << " ";
                prev_x = pts[i].x;
            }
            out << pts[i].x * size << "," << (1 - pts[i].y) * size << " ";
        }
        out << "\"/>\n";
    }
    out << "</g>\n";
}

}  // namespace

std::string curves_svg(const std::vector<NamedCurve>& curves, const std::string& title) {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"" << 400 + 18 * curves.size()
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<text x=\"380\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    panel(out, 60, "false positive rate", "true positive rate", curves, false);
    panel(out, 430, "recall", "precision", curves, true);
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const double y = 395 + 18.0 * static_cast<double>(c);
        out << "<rect x=\"60\" y=\"" << y - 10 << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[c % 6]
            << "\"/><text x=\"80\" y=\"" << y << "\">" << curves[c].label << "  AUC " << fmt(curves[c].curve->auc)
            << "  pAUC " << fmt(curves[c].curve->pauc_normalized) << "  AUPR " << fmt(curves[c].curve->aupr)
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void write_curves_svg(const std::filesystem::path& path, const std::vector<NamedCurve>& curves,
                      const std::string& title) {
    io::write_file_atomic(path, curves_svg(curves, title));
}

}  // namespace dsfs::eval
