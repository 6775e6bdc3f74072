// Command-line front end: scenario-driven evolution curves, parameter sweeps,
// the truncated-Fock cross-check, and the built-in figure presets.

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <sstream>

#include "omx/engine.hpp"
#include "omx/oracle.hpp"
#include "omx/runio.hpp"
#include "../src/parallel.hpp"

namespace {

using namespace omx;

struct CommonOpts {
    std::string scenario_path;
    std::string out_path;
    std::string mode_name = "full";
    int order = 2;
    int threads = 0;
    double resolution = 0.0;  // 0 = take from scenario
    bool svg = false;
};

Scenario load_scenario(const CommonOpts& opts) {
    Scenario sc = Scenario::parse_file(opts.scenario_path);
    if (opts.resolution > 0.0) sc.resolution = opts.resolution;
    return sc;
}

RunManifest make_manifest(const std::string& command, const std::vector<std::string>& argv,
                          const Scenario& sc, const std::string& extra) {
    RunManifest m;
    m.command = command;
    m.argv = argv;
    m.scenario_text = sc.serialize();
    m.params = sc.params();
    m.t_end_kappa = sc.t_end_kappa;
    m.resolution = sc.resolution;
    m.extra = extra;
    return m;
}

std::size_t auto_stride(const TimeGrid& grid, ObservableKind kind) {
    // photon-number evolution is the expensive curve; cap its report points
    const std::size_t cap = kind == ObservableKind::np ? 200 : 800;
    return std::max<std::size_t>(1, grid.n_steps / cap);
}

void emit(const std::string& path, const RunManifest& manifest,
          const std::vector<CsvColumn>& cols, bool svg, const std::string& title) {
    write_csv(path, manifest, cols);
    write_manifest_sidecar(path, manifest);
    if (svg) {
        std::string stem = path;
        if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv")
            stem = stem.substr(0, stem.size() - 4);
        write_svg_plot(stem + ".svg", title, cols);
    }
}

int run_evolve_curve(const Scenario& sc, ObservableKind kind, const NoiseMode& mode,
                     std::size_t stride, int threads, const RunManifest& manifest,
                     const std::string& out, bool svg) {
    const TimeGrid grid = sc.grid();
    const Evaluator eval(sc.params(), grid);
    if (stride == 0) stride = auto_stride(grid, kind);
    const ObservableSeries series = eval.evolve(kind, mode, stride, threads);
    std::vector<CsvColumn> cols(2);
    cols[0].name = "kappa_t";
    cols[0].values = series.times;
    cols[1].name = "value";
    cols[1].values.reserve(series.values.size());
    for (const auto& v : series.values) cols[1].values.push_back(v.real());
    emit(out, manifest, cols, svg, observable_name(kind) + " (" + mode.name() + ")");
    return 0;
}

std::vector<NoiseMode> parse_modes(const std::string& list, int order) {
    std::vector<NoiseMode> modes;
    std::istringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) modes.push_back(NoiseMode::parse(item, order));
    if (modes.empty()) throw ConfigError("sweep: no modes given");
    return modes;
}

double observable_at_end(const Scenario& sc, ObservableKind kind, const NoiseMode& mode) {
    const TimeGrid grid = sc.grid();
    const Evaluator eval(sc.params(), grid);
    const std::size_t node = grid.n_steps;
    switch (kind) {
        case ObservableKind::xc: return eval.cavity_quadrature(node, mode);
        case ObservableKind::np: return eval.photon_number(node, mode);
        case ObservableKind::xm: return eval.mechanical_quadratures(node).first;
        case ObservableKind::pm: return eval.mechanical_quadratures(node).second;
        case ObservableKind::amp_re: return eval.cavity_amplitude(node, mode).real();
        case ObservableKind::amp_im: return eval.cavity_amplitude(node, mode).imag();
    }
    return 0.0;
}

Scenario apply_sweep_var(Scenario sc, const std::string& var, double value) {
    if (var == "delta0_over_omega_m") sc.delta0_over_omega_m = value;
    else if (var == "E_over_kappa") sc.e_over_kappa = value;
    else if (var == "omega_m_over_kappa") {
        // keep Q fixed; omega_m and gamma_m both move
        sc.omega_m_over_kappa = value;
    } else {
        throw ConfigError("sweep: unknown variable '" + var + "'");
    }
    return sc;
}

int cmd_sweep_run(const Scenario& base, const std::string& var, double lo, double hi,
                  std::size_t points, ObservableKind kind, const std::vector<NoiseMode>& modes,
                  int threads, const RunManifest& manifest, const std::string& out, bool svg) {
    if (points == 0) throw ConfigError("sweep: need at least one point");
    std::vector<CsvColumn> cols(1 + modes.size());
    cols[0].name = var;
    cols[0].values.resize(points);
    for (std::size_t m = 0; m < modes.size(); ++m) {
        cols[1 + m].name = observable_name(kind) + "_" + modes[m].name();
        cols[1 + m].values.resize(points);
    }
    std::exception_ptr failure;
    std::mutex failure_mu;
    parallel_for(points, threads, [&](std::size_t i) {
        try {
            const double value =
                points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (points - 1);
            cols[0].values[i] = value;
            const Scenario sc = apply_sweep_var(base, var, value);
            for (std::size_t m = 0; m < modes.size(); ++m)
                cols[1 + m].values[i] = observable_at_end(sc, kind, modes[m]);
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    emit(out, manifest, cols, svg, observable_name(kind) + " sweep over " + var);
    return 0;
}

int cmd_fig_run(int id, const std::string& out_dir, int threads, bool svg,
                const std::vector<std::string>& argv) {
    for (const FigureCurve& curve : figure_curves(id)) {
        std::ostringstream extra;
        extra << "figure=" << id << ";curve=" << curve.name << ";mode=" << curve.mode.name();
        const RunManifest manifest = make_manifest("fig", argv, curve.scenario, extra.str());
        const std::string out = out_dir + "/" + curve.name + ".csv";
        if (curve.kind == "evolve") {
            run_evolve_curve(curve.scenario, curve.observable, curve.mode, curve.stride, threads,
                             manifest, out, svg);
        } else if (curve.kind == "sweep") {
            cmd_sweep_run(curve.scenario, curve.sweep_var, curve.lo, curve.hi, curve.points,
                          curve.observable, {curve.mode}, threads, manifest, out, svg);
        } else if (curve.kind == "qsweep") {
            std::vector<CsvColumn> cols(2);
            cols[0].name = "Q";
            cols[1].name = "R_m";
            cols[0].values.resize(curve.points);
            cols[1].values.resize(curve.points);
            parallel_for(curve.points, threads, [&](std::size_t i) {
                const double q = curve.lo + (curve.hi - curve.lo) *
                                                static_cast<double>(i) /
                                                (curve.points - 1);
                Scenario sc = curve.scenario;
                sc.quality_factor = q;
                const TimeGrid grid = sc.grid();
                cols[0].values[i] = q;
                cols[1].values[i] = noise_ratio_rm(sc.params(), grid, grid.n_steps);
            });
            emit(out, manifest, cols, svg, "R_m vs Q");
        } else if (curve.kind == "esweep") {
            // mean photon number over the final mechanical period
            std::vector<CsvColumn> cols(2);
            cols[0].name = "E_over_kappa";
            cols[1].name = "nP_stable_mean";
            cols[0].values.resize(curve.points);
            cols[1].values.resize(curve.points);
            for (std::size_t i = 0; i < curve.points; ++i) {
                const double e = curve.lo + (curve.hi - curve.lo) *
                                                static_cast<double>(i) /
                                                (curve.points - 1);
                Scenario sc = curve.scenario;
                sc.e_over_kappa = e;
                const TimeGrid grid = sc.grid();
                const Evaluator eval(sc.params(), grid);
                const double period = 2.0 * M_PI / sc.params().omega_m;
                const double t0 = grid.t_end - period;
                double sum = 0.0;
                std::size_t count = 0;
                const std::size_t step = std::max<std::size_t>(1, grid.n_steps / 400);
                std::vector<std::size_t> nodes;
                for (std::size_t k = 0; k <= grid.n_steps; k += step)
                    if (grid.nodes[k] >= t0) nodes.push_back(k);
                std::vector<double> vals(nodes.size());
                parallel_for(nodes.size(), threads, [&](std::size_t j) {
                    vals[j] = eval.photon_number(nodes[j], curve.mode);
                });
                for (double v : vals) {
                    sum += v;
                    ++count;
                }
                cols[0].values[i] = e;
                cols[1].values[i] = count ? sum / static_cast<double>(count) : 0.0;
            }
            emit(out, manifest, cols, svg, "stable-phase nP vs drive");
        }
        std::cout << out << "\n";
    }
    return 0;
}

int cmd_oracle_run(const Scenario& sc, int dim_cav, int dim_mech, const RunManifest& manifest,
                   const std::string& out, bool svg) {
    const TimeGrid grid = sc.grid();
    const oracle::OracleSeries series = oracle::evolve_and_measure(sc.params(), dim_cav, dim_mech,
                                                                   grid);
    std::vector<CsvColumn> cols(5);
    cols[0] = {"kappa_t", series.times};
    cols[1] = {"Xc", series.xc};
    cols[2] = {"nP", series.np};
    cols[3] = {"Xm", series.xm};
    cols[4] = {"Pm", series.pm};
    emit(out, manifest, cols, svg, "oracle observables");
    return 0;
}

int cmd_compare_run(const Scenario& sc, int dim_cav, int dim_mech, double tolerance,
                    double window_start, int threads, const RunManifest& manifest,
                    const std::string& out, bool svg) {
    const TimeGrid grid = sc.grid();
    const SystemParams params = sc.params();
    const oracle::OracleSeries oseries = oracle::evolve_and_measure(params, dim_cav, dim_mech,
                                                                    grid);
    const Evaluator eval(params, grid);
    const std::size_t stride = std::max<std::size_t>(1, grid.n_steps / 200);
    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k <= grid.n_steps; k += stride) nodes.push_back(k);
    if (nodes.back() != grid.n_steps) nodes.push_back(grid.n_steps);

    std::vector<CsvColumn> cols(6);
    cols[0].name = "kappa_t";
    cols[1].name = "Xc_engine";
    cols[2].name = "Xc_oracle";
    cols[3].name = "nP_engine";
    cols[4].name = "nP_oracle";
    cols[5].name = "rel_dev_Xc";
    for (auto& c : cols) c.values.resize(nodes.size());
    parallel_for(nodes.size(), threads, [&](std::size_t i) {
        const std::size_t k = nodes[i];
        cols[0].values[i] = grid.nodes[k];
        cols[1].values[i] = eval.cavity_quadrature(k, NoiseMode::full());
        cols[2].values[i] = oseries.xc[k];
        cols[3].values[i] = eval.photon_number(k, NoiseMode::full());
        cols[4].values[i] = oseries.np[k];
    });
    double ref = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (cols[0].values[i] >= window_start) ref = std::max(ref, std::abs(cols[2].values[i]));
    double max_rel = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double dev = std::abs(cols[1].values[i] - cols[2].values[i]);
        const double rel = ref > 0 ? dev / ref : 0.0;
        cols[5].values[i] = cols[0].values[i] >= window_start ? rel : 0.0;
        if (cols[0].values[i] >= window_start) max_rel = std::max(max_rel, rel);
    }
    emit(out, manifest, cols, svg, "engine vs oracle");
    std::cout << "max_rel_dev_Xc " << max_rel << " (window kappa_t >= " << window_start << ")\n";
    if (tolerance > 0.0 && max_rel > tolerance) {
        std::cerr << "omx: deviation " << max_rel << " exceeds tolerance " << tolerance << "\n";
        return 4;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"driven optomechanical dynamics beyond linearization"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string observable = "Xc";
    std::string modes_list = "full";
    std::string sweep_var = "delta0_over_omega_m";
    double lo = -2.0, hi = 2.0;
    std::size_t points = 41;
    std::size_t stride = 0;
    int dim_cav = 4, dim_mech = 24;
    double tolerance = 0.0, window_start = 0.0;
    int figure_id = 0;
    std::string out_dir = ".";

    auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
        if (needs_scenario)
            cmd->add_option("--scenario", opts.scenario_path, "scenario file")->required();
        cmd->add_option("--out", opts.out_path, "output CSV path");
        cmd->add_option("--threads", opts.threads, "worker threads (1 = deterministic CI mode)");
        cmd->add_option("--resolution", opts.resolution, "kappa dt override");
        cmd->add_flag("--svg", opts.svg, "also write an SVG plot");
    };

    CLI::App* evolve = app.add_subcommand("evolve", "time evolution of one observable");
    add_common(evolve, true);
    evolve->add_option("--observable", observable, "Xc|nP|Xm|Pm|amp_re|amp_im");
    evolve->add_option("--mode", opts.mode_name, "pure_drive|gamma_c_zero|full");
    evolve->add_option("--order", opts.order, "iterated-drive truncation order (full mode)");
    evolve->add_option("--stride", stride, "report every n-th grid node");

    CLI::App* sweep = app.add_subcommand("sweep", "observable at t_end over a parameter range");
    add_common(sweep, true);
    sweep->add_option("--observable", observable, "Xc|nP|Xm|Pm|amp_re|amp_im");
    sweep->add_option("--var", sweep_var, "delta0_over_omega_m|E_over_kappa|omega_m_over_kappa");
    sweep->add_option("--from", lo, "range start")->required();
    sweep->add_option("--to", hi, "range end")->required();
    sweep->add_option("--points", points, "number of sweep points");
    sweep->add_option("--modes", modes_list, "comma-separated noise modes");
    sweep->add_option("--order", opts.order, "iterated-drive truncation order");

    CLI::App* orc = app.add_subcommand("oracle", "truncated-Fock master-equation observables");
    add_common(orc, true);
    orc->add_option("--dim-cav", dim_cav, "cavity truncation");
    orc->add_option("--dim-mech", dim_mech, "mechanical truncation");

    CLI::App* cmp = app.add_subcommand("compare", "engine vs oracle deviations");
    add_common(cmp, true);
    cmp->add_option("--dim-cav", dim_cav, "cavity truncation");
    cmp->add_option("--dim-mech", dim_mech, "mechanical truncation");
    cmp->add_option("--tolerance", tolerance, "exit 4 beyond this relative deviation");
    cmp->add_option("--window-start", window_start, "compare only kappa_t >= this");

    CLI::App* fig = app.add_subcommand("fig", "reproduce a figure's data as CSV");
    fig->add_option("--id", figure_id, "figure number 1..7")->required();
    fig->add_option("--out-dir", out_dir, "output directory");
    fig->add_option("--threads", opts.threads, "worker threads");
    fig->add_flag("--svg", opts.svg, "also write SVG plots");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(evolve)) {
            if (opts.out_path.empty()) throw ConfigError("evolve: --out is required");
            const Scenario sc = load_scenario(opts);
            const NoiseMode mode = NoiseMode::parse(opts.mode_name, opts.order);
            const RunManifest manifest = make_manifest(
                "evolve", args, sc, "observable=" + observable + ";mode=" + mode.name());
            return run_evolve_curve(sc, parse_observable(observable), mode, stride, opts.threads,
                                    manifest, opts.out_path, opts.svg);
        }
        if (app.got_subcommand(sweep)) {
            if (opts.out_path.empty()) throw ConfigError("sweep: --out is required");
            const Scenario sc = load_scenario(opts);
            const std::vector<NoiseMode> modes = parse_modes(modes_list, opts.order);
            const RunManifest manifest = make_manifest(
                "sweep", args, sc, "observable=" + observable + ";var=" + sweep_var);
            return cmd_sweep_run(sc, sweep_var, lo, hi, points, parse_observable(observable),
                                 modes, opts.threads, manifest, opts.out_path, opts.svg);
        }
        if (app.got_subcommand(orc)) {
            if (opts.out_path.empty()) throw ConfigError("oracle: --out is required");
            const Scenario sc = load_scenario(opts);
            const RunManifest manifest = make_manifest("oracle", args, sc, "");
            return cmd_oracle_run(sc, dim_cav, dim_mech, manifest, opts.out_path, opts.svg);
        }
        if (app.got_subcommand(cmp)) {
            if (opts.out_path.empty()) throw ConfigError("compare: --out is required");
            const Scenario sc = load_scenario(opts);
            const RunManifest manifest = make_manifest("compare", args, sc, "");
            return cmd_compare_run(sc, dim_cav, dim_mech, tolerance, window_start, opts.threads,
                                   manifest, opts.out_path, opts.svg);
        }
        if (app.got_subcommand(fig))
            return cmd_fig_run(figure_id, out_dir, opts.threads, opts.svg, args);
    } catch (const omx::ConfigError& err) {
        std::cerr << "omx: config error: " << err.what() << "\n";
        return 2;
    } catch (const omx::GridMismatchError& err) {
        std::cerr << "omx: config error: " << err.what() << "\n";
        return 2;
    } catch (const omx::NumericalError& err) {
        std::cerr << "omx: numerical error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "omx: error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
