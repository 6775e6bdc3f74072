#ifndef OMX_RUNIO_HPP
#define OMX_RUNIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "omx/engine.hpp"
#include "omx/params.hpp"

namespace omx {

inline constexpr const char* kVersionTag = "omx-0.1.0";

std::uint64_t fnv1a64(const std::string& text);

/// Everything needed to regenerate an output file: the exact command line,
/// the scenario content, and the resolved parameters. Serialized as '#'
/// comment lines at the top of each CSV; the run id is the hash of that
/// block. Wall-clock and output checksum go to a sidecar "<out>.manifest",
/// keeping the CSV itself byte-reproducible.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::string scenario_text;  // inline copy, not the path
    SystemParams params;
    double t_end_kappa = 0.0;
    double resolution = 0.0;
    std::string extra;  // command-specific settings, "key=value;" list

    std::string block() const;           // the embedded comment block
    std::string run_id() const;          // hex hash of block()
};

struct CsvColumn {
    std::string name;
    RealVec values;
};

void write_csv(const std::string& path, const RunManifest& manifest,
               const std::vector<CsvColumn>& columns);
void write_manifest_sidecar(const std::string& csv_path, const RunManifest& manifest);

/// Minimal polyline plot; series share the x column.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<CsvColumn>& columns);

/// Built-in scenario presets reproducing the figure parameter sets.
struct FigureCurve {
    std::string name;       // file stem
    Scenario scenario;
    std::string kind;       // evolve | sweep | qsweep | esweep
    ObservableKind observable = ObservableKind::xc;
    NoiseMode mode = NoiseMode::full();
    // sweep settings
    std::string sweep_var;
    double lo = 0.0, hi = 0.0;
    std::size_t points = 0;
    std::size_t stride = 0;  // evolve report stride; 0 = auto
};

std::vector<FigureCurve> figure_curves(int figure_id);

}  // namespace omx

#endif
