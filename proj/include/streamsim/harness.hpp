#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "streamsim/core.hpp"
#include "streamsim/metrics.hpp"
#include "streamsim/mock_decoders.hpp"
#include "streamsim/s2t_pipeline.hpp"
#include "streamsim/translate.hpp"

namespace streamsim {

// ---------- configuration ----------

// every key a config file may set, each overridable by a CLI flag of the
// same name; returns (key, default) pairs in documentation order
const std::vector<std::pair<std::string, std::string>>& config_key_defaults();

struct RunConfig {
    std::string mode = "s2t";  // s2t | mt | cascade
    PipelineConfig s2t;
    MtConfig mt;
    PromptTemplate prompt;
    bool lenient_script = false;
    std::string sort_by = "mean_latency_ms";
};

// defaults, overlaid with the given pairs; unknown keys are an error
std::map<std::string, std::string> merged_config_kv(
    const std::map<std::string, std::string>& overrides);
RunConfig make_run_config(const std::map<std::string, std::string>& kv);

// ---------- drivers ----------

struct RunResult {
    std::vector<std::pair<std::string, std::string>> config;  // effective key/values
    std::map<std::string, double> metrics;  // absent keys mean not computable
    std::vector<EmissionEvent> events;      // the run's output stream
    std::vector<EmissionEvent> asr_events;  // cascade only: intermediate stage
    std::string error;                      // set instead of throwing in grid rows
};

std::set<int> voiced_payloads(std::span<const Granule> granules);

// Full simulated run: gate, accumulate, stream through the pipeline. All
// emission stamps follow the computationally unaware clock. gold may be null.
RunResult run_s2t(std::span<const Granule> granules, const RunConfig& cfg,
                  IncrementalDecoder& decoder, const Transcript* gold);

RunResult run_mt(std::span<const TimedWord> words, const RunConfig& cfg, TextDecoder& decoder,
                 const Transcript* gold);

// speech stage output words feed the translation stage; the translation
// emission clock is the newest consumed speech emission time
RunResult run_cascade(std::span<const Granule> granules, const RunConfig& cfg,
                      IncrementalDecoder& speech_decoder, TextDecoder& text_decoder,
                      const Transcript* gold);

// ---------- grid search ----------

struct SweepSpec {
    // parameter name -> values, in file order; names must be config keys
    std::vector<std::pair<std::string, std::vector<std::string>>> params;
};

SweepSpec load_sweep(const std::string& path);

struct GridInputs {
    std::vector<Granule> granules;               // s2t and cascade modes
    OracleScript s2t_script;
    std::map<std::string, std::string> mt_table; // mt and cascade modes
    std::vector<TimedWord> mt_words;             // mt mode input
    std::optional<Transcript> gold;
};

struct SweepRow {
    std::vector<std::string> values;  // one per swept parameter
    RunResult result;
};

// Cartesian product of the sweep, first parameter outermost. Points run
// concurrently; a failing point records its error and the sweep continues.
std::vector<SweepRow> grid_search(const SweepSpec& sweep,
                                  const std::map<std::string, std::string>& base_kv,
                                  const GridInputs& inputs);

// Rows sorted by the metric ascending (missing metric sorts last), ties by
// grid order; header then one line per row, RFC 4180 quoting.
void write_results_csv(const std::string& path, const SweepSpec& sweep,
                       std::span<const SweepRow> rows, const std::string& sort_by);

std::string format_metric(double value);

}  // namespace streamsim
