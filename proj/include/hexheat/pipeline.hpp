#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hexheat/diagnostics.hpp"
#include "hexheat/geocode.hpp"
#include "hexheat/indices.hpp"
#include "hexheat/models.hpp"

namespace hexheat {

/// Declarative description of one end-to-end run. Loaded from a JSON
/// document; relative paths resolve against the config file's directory.
struct PipelineConfig {
    struct Bands {
        std::string red;
        std::string nir;
        std::string green;
        std::string swir;
        std::string thermal_dn;
    } bands;
    std::string population_path;
    std::string buildings_path;

    RadiometricConstants radiometric;
    /// Scene extrema for the vegetation proportion; defaults to the NDVI
    /// grid statistics when unset.
    std::optional<double> ndvi_min;
    std::optional<double> ndvi_max;
    bool lst_celsius = true;

    std::vector<double> diameters = {600, 500, 480, 400, 300, 200};
    std::vector<ModelKind> model_kinds = {ModelKind::ols, ModelKind::sar,
                                          ModelKind::sem};
    GeocodeConfig geocode;

    std::string output_dir;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool export_weights = false;
    bool verbose = false;

    /// Parse, resolve relative paths, apply the HEXHEAT_CACHE_DIR override.
    static PipelineConfig load_file(const std::string& path);

    /// Input paths exist, diameters positive, at least one model kind.
    void validate() const;
};

/// Emit the canonical JSON form (deterministic key order).
void save_config(const PipelineConfig& config, const std::string& path);

inline constexpr std::array<const char*, 6> kStageNames = {
    "indices", "grid", "geocode", "aggregate", "fit", "report"};

/// Run one named stage against the config's inputs and output directory.
void run_stage(const PipelineConfig& config, const std::string& stage);

/// All stages in order: indices, grid, geocode, aggregate, fit, report.
/// Returns the model-selection report. A RUN_INCOMPLETE marker file exists
/// in the output directory for the duration of the run (and stays behind
/// after a failure).
SelectionReport run_pipeline(const PipelineConfig& config);

/// The per-fit JSON document written by the fit stage and read back by the
/// report stage.
struct FitDocument {
    double diameter = 0.0;
    ModelKind kind = ModelKind::ols;
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t param_count = 0;
    std::size_t dropped_cells = 0;
    std::vector<Coefficient> coefficients;
    std::optional<Coefficient> spatial;
    double sigma2 = 0.0;
    double log_likelihood = 0.0;
    double aic = 0.0;
    double r2 = 0.0;
    double adjusted_r2 = 0.0;
    DiagnosticResult moran;
    std::optional<DiagnosticResult> lm_lag;
    std::optional<DiagnosticResult> lm_error;
    std::vector<double> residuals;
};

void save_fit_document(const FitDocument& doc, const std::string& path);
FitDocument load_fit_document(const std::string& path);

} // namespace hexheat
