#include "omx/runio.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace omx {

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::string RunManifest::block() const {
    std::ostringstream out;
    out << "# " << kVersionTag << " " << command << "\n";
    out << "# argv:";
    for (const auto& a : argv) out << " " << a;
    out << "\n";
    out << "# params: g=" << fmt(params.g) << " kappa=" << fmt(params.kappa)
        << " gamma_m=" << fmt(params.gamma_m) << " omega_m=" << fmt(params.omega_m)
        << " delta0=" << fmt(params.delta0) << " E=" << fmt(params.drive_E)
        << " n_th=" << fmt(params.n_th) << "\n";
    out << "# grid: t_end_kappa=" << fmt(t_end_kappa) << " resolution=" << fmt(resolution)
        << "\n";
    if (!extra.empty()) out << "# settings: " << extra << "\n";
    std::istringstream sc(scenario_text);
    std::string line;
    while (std::getline(sc, line))
        if (!line.empty()) out << "# scenario: " << line << "\n";
    return out.str();
}

std::string RunManifest::run_id() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(block())));
    return buf;
}

void write_csv(const std::string& path, const RunManifest& manifest,
               const std::vector<CsvColumn>& columns) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file " + path);
    out << "# run_id: " << manifest.run_id() << "\n";
    out << manifest.block();
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << (i ? "," : "") << columns[i].name;
    out << "\n";
    const std::size_t rows = columns.empty() ? 0 : columns.front().values.size();
    for (const auto& col : columns)
        if (col.values.size() != rows)
            throw NumericalError("csv: ragged columns for " + path);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            out << (i ? "," : "") << fmt(columns[i].values[r]);
        out << "\n";
    }
}

void write_manifest_sidecar(const std::string& csv_path, const RunManifest& manifest) {
    std::ifstream in(csv_path, std::ios::binary);
    std::ostringstream content;
    content << in.rdbuf();
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now).count();
    std::ofstream out(csv_path + ".manifest");
    if (!out) return;
    out << manifest.block();
    out << "# run_id: " << manifest.run_id() << "\n";
    out << "# wall_clock_unix: " << secs << "\n";
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content.str())));
    out << "# output_fnv1a: " << buf << "\n";
}

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<CsvColumn>& columns) {
    if (columns.size() < 2) return;
    const RealVec& x = columns.front().values;
    if (x.empty()) return;
    const double width = 720, height = 440, ml = 70, mr = 20, mt = 30, mb = 40;
    double xmin = x.front(), xmax = x.front(), ymin = 0, ymax = 0;
    bool first = true;
    for (double v : x) {
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
    }
    for (std::size_t c = 1; c < columns.size(); ++c)
        for (double v : columns[c].values) {
            if (first) {
                ymin = ymax = v;
                first = false;
            }
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const char* colors[] = {"#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e"};
    auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto py = [&](double v) { return height - mb - (v - ymin) / (ymax - ymin) * (height - mt - mb); };

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n";
    out << "<rect x='" << ml << "' y='" << mt << "' width='" << width - ml - mr << "' height='"
        << height - mt - mb << "' fill='none' stroke='black'/>\n";
    out << "<text x='" << width / 2 << "' y='18' text-anchor='middle' font-size='13'>" << title
        << "</text>\n";
    out << "<text x='" << width / 2 << "' y='" << height - 8 << "' text-anchor='middle' "
        << "font-size='11'>" << columns.front().name << "</text>\n";
    for (std::size_t c = 1; c < columns.size(); ++c) {
        out << "<polyline fill='none' stroke='" << colors[(c - 1) % 5] << "' stroke-width='1.2' "
            << "points='";
        for (std::size_t r = 0; r < x.size(); ++r)
            out << px(x[r]) << "," << py(columns[c].values[r]) << " ";
        out << "'/>\n";
        out << "<text x='" << width - mr - 4 << "' y='" << mt + 14 * static_cast<double>(c)
            << "' text-anchor='end' font-size='11' fill='" << colors[(c - 1) % 5] << "'>"
            << columns[c].name << "</text>\n";
    }
    // axis extremes
    out << "<text x='" << ml - 4 << "' y='" << height - mb << "' text-anchor='end' "
        << "font-size='10'>" << fmt(ymin) << "</text>\n";
    out << "<text x='" << ml - 4 << "' y='" << mt + 10 << "' text-anchor='end' font-size='10'>"
        << fmt(ymax) << "</text>\n";
    out << "<text x='" << ml << "' y='" << height - mb + 14 << "' font-size='10'>" << fmt(xmin)
        << "</text>\n";
    out << "<text x='" << width - mr << "' y='" << height - mb + 14
        << "' text-anchor='end' font-size='10'>" << fmt(xmax) << "</text>\n";
    out << "</svg>\n";
}

namespace {

Scenario base_scenario(double g, double omega, double q, double det_over_omega, double e,
                       double t_end) {
    Scenario sc;
    sc.g_over_kappa = g;
    sc.omega_m_over_kappa = omega;
    sc.quality_factor = q;
    sc.delta0_over_omega_m = det_over_omega;
    sc.e_over_kappa = e;
    sc.t_end_kappa = t_end;
    sc.resolution = 0.02;
    return sc;
}

}  // namespace

std::vector<FigureCurve> figure_curves(int figure_id) {
    std::vector<FigureCurve> out;
    switch (figure_id) {
        case 1:
            for (double omega : {1.0, 2.0}) {
                FigureCurve c;
                c.name = "fig1_rm_omega" + std::string(omega == 1.0 ? "1" : "2");
                c.scenario = base_scenario(0.5, omega, 100.0, 0.0, 0.01, 10.0);
                c.kind = "qsweep";
                c.lo = 10.0;
                c.hi = 200.0;
                c.points = 25;
                out.push_back(c);
            }
            break;
        case 2:
            for (double g : {0.1, 0.5, 1.0}) {
                FigureCurve c;
                std::ostringstream name;
                name << "fig2_xc_g" << g;
                c.name = name.str();
                c.scenario = base_scenario(g, 1.0, 100.0, 0.0, 0.01, 20.0);
                c.kind = "evolve";
                c.observable = ObservableKind::xc;
                out.push_back(c);
            }
            break;
        case 3:
            for (double det : {0.0, 1.0, -1.0}) {
                FigureCurve c;
                std::ostringstream name;
                name << "fig3_xc_det" << det;
                c.name = name.str();
                c.scenario = base_scenario(2.0, 1.0, 100.0, det, 0.01, 20.0);
                c.kind = "evolve";
                c.observable = ObservableKind::xc;
                out.push_back(c);
            }
            break;
        case 4:
            for (double q : {10.0, 100.0}) {
                FigureCurve c;
                c.name = "fig4_xm_q" + std::to_string(static_cast<int>(q));
                c.scenario = base_scenario(2.0, 1.0, q, 1.0, 0.01, 150.0);
                c.kind = "evolve";
                c.observable = ObservableKind::xm;
                out.push_back(c);
            }
            break;
        case 5: {
            const char* names[] = {"fig5_np_t_full", "fig5_np_t_gamma_c_zero",
                                   "fig5_np_t_pure_drive"};
            const NoiseMode modes[] = {NoiseMode::full(), NoiseMode::gamma_c_zero(),
                                       NoiseMode::pure_drive()};
            for (int i = 0; i < 3; ++i) {
                FigureCurve c;
                c.name = names[i];
                c.scenario = base_scenario(2.0, 2.0, 100.0, 1.0, 0.01, 40.0);
                c.kind = "evolve";
                c.observable = ObservableKind::np;
                c.mode = modes[i];
                out.push_back(c);
            }
            const char* snames[] = {"fig5_np_det_full", "fig5_np_det_gamma_c_zero",
                                    "fig5_np_det_pure_drive"};
            for (int i = 0; i < 3; ++i) {
                FigureCurve c;
                c.name = snames[i];
                c.scenario = base_scenario(2.0, 2.0, 100.0, 0.0, 0.01, 40.0);
                c.kind = "sweep";
                c.observable = ObservableKind::np;
                c.mode = modes[i];
                c.sweep_var = "delta0_over_omega_m";
                c.lo = -2.0;
                c.hi = 2.0;
                c.points = 41;
                out.push_back(c);
            }
            break;
        }
        case 6: {
            FigureCurve c;
            c.name = "fig6_np_vs_drive";
            c.scenario = base_scenario(2.0, 2.0, 100.0, 0.0, 0.01, 40.0);
            c.kind = "esweep";
            c.observable = ObservableKind::np;
            c.lo = 0.005;
            c.hi = 0.05;
            c.points = 10;
            out.push_back(c);
            break;
        }
        case 7:
            for (double omega : {0.5, 3.0}) {
                FigureCurve c;
                c.name = omega < 1.0 ? "fig7_np_det_bad_cavity" : "fig7_np_det_good_cavity";
                c.scenario = base_scenario(2.0, omega, 100.0, 0.0, 0.01, 10.0);
                c.kind = "sweep";
                c.observable = ObservableKind::np;
                c.sweep_var = "delta0_over_omega_m";
                c.lo = -2.0;
                c.hi = 2.0;
                c.points = 41;
                out.push_back(c);
            }
            break;
        default:
            throw ConfigError("fig: figure id must be 1..7");
    }
    return out;
}

}  // namespace omx
