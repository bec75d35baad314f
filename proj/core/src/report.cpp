#include "stamp/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "stamp/errors.hpp"

namespace stamp {

namespace {

// Minimal SVG canvas with a fixed margin-based plot area.
class Svg {
public:
    Svg(double w, double h) : w_(w), h_(h) {
        os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
            << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
        os_ << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width = 1.0, bool dashed = false) {
        os_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\""
            << y2 << "\" stroke=\"" << color << "\" stroke-width=\"" << width << "\"";
        if (dashed) os_ << " stroke-dasharray=\"4 3\"";
        os_ << "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& color, double width = 1.5) {
        os_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
            << "\" points=\"";
        for (const auto& [x, y] : pts) os_ << x << ',' << y << ' ';
        os_ << "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill) {
        os_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\""
            << h << "\" fill=\"" << fill << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, int size = 12,
              const std::string& anchor = "start") {
        os_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
            << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
            << "</text>\n";
    }

    void save(const std::filesystem::path& path) {
        os_ << "</svg>\n";
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw FormatError("cannot open '" + path.string() + "' for writing");
        f << os_.str();
    }

    double width() const { return w_; }
    double height() const { return h_; }

private:
    double w_, h_;
    std::ostringstream os_;
};

constexpr double kMargin = 50;

} // namespace

void write_roc_svg(const std::vector<BagScore>& scores,
                   const std::filesystem::path& path) {
    if (scores.empty()) throw ValueError("write_roc_svg: no scores");
    std::vector<double> s;
    std::vector<int> y;
    for (const auto& b : scores) {
        s.push_back(b.score);
        y.push_back(b.label);
    }
    const double auc_value = auc(s, y);

    // Step curve: sweep thresholds from high to low.
    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return s[a] > s[b]; });
    double n_pos = 0, n_neg = 0;
    for (int v : y) (v == 1 ? n_pos : n_neg) += 1;

    Svg svg(420, 420);
    const double span = svg.width() - 2 * kMargin;
    auto px = [&](double fpr) { return kMargin + fpr * span; };
    auto py = [&](double tpr) { return svg.height() - kMargin - tpr * span; };

    std::vector<std::pair<double, double>> pts{{px(0), py(0)}};
    double tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && s[order[j + 1]] == s[order[i]]) ++j;
        for (size_t k = i; k <= j; ++k) (y[order[k]] == 1 ? tp : fp) += 1;
        pts.emplace_back(px(fp / std::max(1.0, n_neg)), py(tp / std::max(1.0, n_pos)));
        i = j + 1;
    }

    svg.line(px(0), py(0), px(1), py(0), "black");
    svg.line(px(0), py(0), px(0), py(1), "black");
    svg.line(px(0), py(0), px(1), py(1), "gray", 1.0, true);
    svg.polyline(pts, "#1f77b4", 2.0);
    svg.text(px(0.5), svg.height() - 12, "false positive rate", 12, "middle");
    svg.text(14, py(0.5), "TPR", 12, "middle");
    std::ostringstream label;
    label.precision(4);
    label << "ROC  (AUC = " << auc_value << ")";
    svg.text(px(0.5), kMargin - 14, label.str(), 14, "middle");
    svg.save(path);
}

void write_bars_svg(const std::string& title, const std::vector<FigureBar>& bars,
                    const std::filesystem::path& path) {
    if (bars.empty()) throw ValueError("write_bars_svg: no bars");
    std::set<int> patterns;
    std::set<std::string> variants;
    for (const auto& b : bars) {
        patterns.insert(b.patterns);
        variants.insert(b.variant);
    }
    const std::vector<int> np(patterns.begin(), patterns.end());
    const std::vector<std::string> vars(variants.begin(), variants.end());
    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};

    Svg svg(560, 360);
    const double x0 = kMargin, x1 = svg.width() - 20;
    const double y0 = svg.height() - kMargin, y1 = 40;
    const double group_w = (x1 - x0) / static_cast<double>(np.size());
    const double bar_w = group_w / (static_cast<double>(vars.size()) + 1.0);
    auto py = [&](double v) { return y0 - v * (y0 - y1); };

    svg.line(x0, y0, x1, y0, "black");
    svg.line(x0, y0, x0, y1, "black");
    for (double g : {0.25, 0.5, 0.75, 1.0}) {
        svg.line(x0, py(g), x1, py(g), "#dddddd");
        std::ostringstream t;
        t << g;
        svg.text(x0 - 6, py(g) + 4, t.str(), 10, "end");
    }

    for (size_t gi = 0; gi < np.size(); ++gi) {
        for (size_t vi = 0; vi < vars.size(); ++vi) {
            const FigureBar* bar = nullptr;
            for (const auto& b : bars)
                if (b.patterns == np[gi] && b.variant == vars[vi]) bar = &b;
            if (!bar) continue;
            const double x = x0 + group_w * static_cast<double>(gi) +
                             bar_w * (static_cast<double>(vi) + 0.5);
            svg.rect(x, py(bar->mean), bar_w * 0.9, y0 - py(bar->mean),
                     colors[vi % std::size(colors)]);
            const double cx = x + bar_w * 0.45;
            svg.line(cx, py(bar->mean - bar->std), cx, py(bar->mean + bar->std), "black");
        }
        svg.text(x0 + group_w * (static_cast<double>(gi) + 0.5), y0 + 16,
                 std::to_string(np[gi]), 11, "middle");
    }
    for (size_t vi = 0; vi < vars.size(); ++vi) {
        const double lx = x0 + 12 + 130 * static_cast<double>(vi);
        svg.rect(lx, 14, 10, 10, colors[vi % std::size(colors)]);
        svg.text(lx + 14, 23, vars[vi], 11);
    }
    svg.text(svg.width() / 2, svg.height() - 10, "patterns per branch", 12, "middle");
    svg.text(x0, y1 - 14, title, 13);
    svg.save(path);
}

void write_history_svg(const std::vector<HistoryPoint>& points,
                       const std::filesystem::path& path) {
    if (points.empty()) throw ValueError("write_history_svg: no history");
    double max_loss = 0;
    for (const auto& p : points) max_loss = std::max(max_loss, p.mean_total);
    if (max_loss <= 0) max_loss = 1;

    Svg svg(560, 360);
    const double x0 = kMargin, x1 = svg.width() - 20;
    const double y0 = svg.height() - kMargin, y1 = 40;
    auto px = [&](double e) {
        const double span = std::max<double>(1.0, static_cast<double>(points.size() - 1));
        return x0 + (e - 1) / span * (x1 - x0);
    };
    auto py_loss = [&](double v) { return y0 - v / max_loss * (y0 - y1); };
    auto py_auc = [&](double v) { return y0 - v * (y0 - y1); };

    svg.line(x0, y0, x1, y0, "black");
    svg.line(x0, y0, x0, y1, "black");
    std::vector<std::pair<double, double>> loss_pts, auc_pts;
    for (const auto& p : points) {
        loss_pts.emplace_back(px(p.epoch), py_loss(p.mean_total));
        auc_pts.emplace_back(px(p.epoch), py_auc(p.val_auc));
    }
    svg.polyline(loss_pts, "#d62728", 2.0);
    svg.polyline(auc_pts, "#1f77b4", 2.0);
    svg.rect(x0 + 12, 14, 10, 10, "#d62728");
    svg.text(x0 + 26, 23, "train loss (scaled)", 11);
    svg.rect(x0 + 160, 14, 10, 10, "#1f77b4");
    svg.text(x0 + 174, 23, "val AUC", 11);
    svg.text(svg.width() / 2, svg.height() - 10, "epoch", 12, "middle");
    svg.save(path);
}

std::vector<std::string> generate_reports(const std::filesystem::path& in_dir,
                                          std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };
    std::vector<std::string> written;

    const auto scores_path = in_dir / "scores.csv";
    if (std::filesystem::exists(scores_path)) {
        try {
            const auto scores = read_scores_csv(scores_path.string());
            const auto out = in_dir / "roc.svg";
            write_roc_svg(scores, out);
            written.push_back(out.string());
        } catch (const std::exception& e) {
            warn(std::string("roc plot failed: ") + e.what());
        }
    } else {
        warn("no scores.csv in '" + in_dir.string() + "', skipping ROC plot");
    }

    const auto figures_path = in_dir / "figures_long.csv";
    if (std::filesystem::exists(figures_path)) {
        try {
            std::ifstream is(figures_path);
            std::string line;
            std::getline(is, line); // header
            std::map<std::string, std::vector<FigureBar>> by_figure;
            while (std::getline(is, line)) {
                if (line.empty()) continue;
                std::stringstream ss(line);
                std::string figure, variant, np_s, metric, mean_s, std_s;
                std::getline(ss, figure, ',');
                std::getline(ss, variant, ',');
                std::getline(ss, np_s, ',');
                std::getline(ss, metric, ',');
                std::getline(ss, mean_s, ',');
                std::getline(ss, std_s, ',');
                if (metric != "auc") continue;
                by_figure[figure].push_back(
                    FigureBar{variant, std::stoi(np_s), std::stod(mean_s), std::stod(std_s)});
            }
            for (const auto& [figure, bars] : by_figure) {
                const auto out = in_dir / ("bars_" + figure + ".svg");
                write_bars_svg("AUC by " + figure + " variant", bars, out);
                written.push_back(out.string());
            }
        } catch (const std::exception& e) {
            warn(std::string("ablation bar plots failed: ") + e.what());
        }
    } else {
        warn("no figures_long.csv in '" + in_dir.string() + "', skipping bar plots");
    }

    const auto history_path = in_dir / "history.csv";
    if (std::filesystem::exists(history_path)) {
        try {
            std::ifstream is(history_path);
            std::string line;
            std::getline(is, line); // header
            std::vector<HistoryPoint> points;
            while (std::getline(is, line)) {
                if (line.empty()) continue;
                std::stringstream ss(line);
                std::vector<std::string> f;
                std::string tok;
                while (std::getline(ss, tok, ',')) f.push_back(tok);
                if (f.size() < 10) continue;
                points.push_back(HistoryPoint{std::stoi(f[0]), std::stod(f[1]),
                                              std::stod(f[6])});
            }
            const auto out = in_dir / "history.svg";
            write_history_svg(points, out);
            written.push_back(out.string());
        } catch (const std::exception& e) {
            warn(std::string("history plot failed: ") + e.what());
        }
    } else {
        warn("no history.csv in '" + in_dir.string() + "', skipping history plot");
    }
    return written;
}

} // namespace stamp
