#include "hqcnn/report.hpp"

#include "hqcnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hqcnn::report {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto partial = path;
    partial += ".partial";
    {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + partial.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("failed writing " + partial.string());
    }
    std::error_code ec;
    std::filesystem::rename(partial, path, ec);
    if (ec) throw IoError("cannot finalise " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string svg_line_plot(const std::vector<Series>& series, std::string_view title, std::string_view y_label) {
    constexpr double width = 640, height = 400;
    constexpr double left = 60, right = 20, top = 40, bottom = 50;
    constexpr double pw = width - left - right;
    constexpr double ph = height - top - bottom;

    std::size_t n = 0;
    for (const auto& s : series) n = std::max(n, s.values.size());
    const double xmax = static_cast<double>(std::max<std::size_t>(n, 2));
    auto px = [&](double epoch) { return left + (epoch - 1.0) / (xmax - 1.0) * pw; };
    auto py = [&](double v) { return top + (1.0 - std::clamp(v, 0.0, 1.0)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << title << "</text>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        o << "<line x1=\"" << left - 5 << "\" y1=\"" << py(v) << "\" x2=\"" << left << "\" y2=\"" << py(v)
          << "\" stroke=\"black\"/>";
        o << "<text x=\"" << left - 8 << "\" y=\"" << py(v) + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << v << "</text>\n";
    }
    const int xticks = static_cast<int>(std::min<std::size_t>(n == 0 ? 1 : n - 1, 5));
    for (int i = 0; i <= xticks; ++i) {
        const double e = 1.0 + (xmax - 1.0) * i / std::max(xticks, 1);
        const long label = std::lround(e);
        o << "<line x1=\"" << px(e) << "\" y1=\"" << top + ph << "\" x2=\"" << px(e) << "\" y2=\"" << top + ph + 5
          << "\" stroke=\"black\"/>";
        o << "<text x=\"" << px(e) << "\" y=\"" << top + ph + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << label << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch</text>\n";
    o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << y_label << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            o << fixed6(px(static_cast<double>(i + 1))) << ',' << fixed6(py(s.values[i])) << ' ';
        }
        o << "\"/>\n";
        const double ly = top + 14.0 + 16.0 * static_cast<double>(k);
        o << "<line x1=\"" << left + pw - 120 << "\" y1=\"" << ly << "\" x2=\"" << left + pw - 100 << "\" y2=\""
          << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>";
        o << "<text x=\"" << left + pw - 95 << "\" y=\"" << ly + 4
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

MetricMap curve_metric_map(const diagnostics::CurveMetrics& m) {
    MetricMap out;
    out["final_gap"] = m.final_gap;
    out["mean_gap"] = m.mean_gap;
    out["epoch_to_90"] = m.epoch_to_threshold ? std::optional<double>(*m.epoch_to_threshold) : std::nullopt;
    out["early_slope"] = m.early_slope;
    out["overfit_drop"] = m.overfit_drop;
    out["train_sigma"] = m.train_sigma;
    out["train_mu_abs_diff"] = m.train_mu;
    out["val_sigma"] = m.val_sigma;
    out["val_mu_abs_diff"] = m.val_mu;
    out["stability_ratio"] = m.stability_ratio;
    return out;
}

std::string key_value_report(const MetricMap& metrics) {
    std::string out;
    for (const auto& [key, value] : metrics) {
        out += key;
        out += " = ";
        if (!value) {
            out += key == "epoch_to_90" ? "not reached" : "undefined";
        } else if (key == "epoch_to_90") {
            out += std::to_string(std::lround(*value));
        } else {
            out += fixed6(*value);
        }
        out += '\n';
    }
    return out;
}

} // namespace hqcnn::report
