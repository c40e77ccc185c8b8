#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "streamsim/harness.hpp"
#include "streamsim/io.hpp"
#include "streamsim/metrics.hpp"
#include "streamsim/text.hpp"

using namespace streamsim;

namespace {

// --config file plus one CLI flag per config key; flags win over the file
struct ConfigArgs {
    std::string config_path;
    std::map<std::string, std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key = value config file");
        for (const auto& [key, def] : config_key_defaults()) {
            cmd->add_option_function<std::string>(
                "--" + key,
                [this, key = key](const std::string& value) { overrides[key] = value; },
                def.empty() ? std::string("config key") : "config key (default " + def + ")");
        }
    }

    std::map<std::string, std::string> kv(const std::string& forced_mode = "") const {
        std::map<std::string, std::string> merged;
        if (!config_path.empty()) merged = load_config_kv(config_path);
        for (const auto& [key, value] : overrides) merged[key] = value;
        if (!forced_mode.empty()) merged["mode"] = forced_mode;
        return merged;
    }
};

void print_metrics(const std::map<std::string, double>& metrics) {
    for (const auto& [key, value] : metrics)
        std::cout << key << " = " << format_metric(value) << "\n";
}

// hypothesis words from either an emission log (.jsonl) or a timed-word TSV
std::vector<TimedWord> load_words_any(const std::string& path) {
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl")
        return words_from_events(load_events_jsonl(path));
    return load_gold_tsv(path).words;
}

std::optional<Transcript> maybe_gold(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return load_gold_tsv(path);
}

void finish_run(const RunResult& result, const std::string& events_out,
                const std::string& asr_events_out) {
    if (!events_out.empty()) write_events_jsonl(events_out, result.events);
    if (!asr_events_out.empty()) write_events_jsonl(asr_events_out, result.asr_events);
    print_metrics(result.metrics);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simultaneous speech / text translation simulator"};
    app.require_subcommand(1);

    // ---- simulate-s2t ----
    auto* s2t = app.add_subcommand("simulate-s2t", "stream granules through the speech pipeline");
    ConfigArgs s2t_cfg;
    s2t_cfg.attach(s2t);
    std::string s2t_granules, s2t_script, s2t_gold, s2t_events_out;
    s2t->add_option("--granules", s2t_granules, "granule TSV")->required();
    s2t->add_option("--script", s2t_script, "oracle decoder script TSV")->required();
    s2t->add_option("--gold", s2t_gold, "gold transcript TSV");
    s2t->add_option("--events-out", s2t_events_out, "write emission events JSONL");
    s2t->callback([&] {
        RunConfig cfg = make_run_config(s2t_cfg.kv("s2t"));
        std::vector<Granule> granules = load_granules(s2t_granules);
        DiagonalOracleDecoder decoder = DiagonalOracleDecoder::from_file(s2t_script);
        std::optional<Transcript> gold = maybe_gold(s2t_gold);
        RunResult result = run_s2t(granules, cfg, decoder, gold ? &*gold : nullptr);
        finish_run(result, s2t_events_out, "");
    });

    // ---- simulate-mt ----
    auto* mt = app.add_subcommand("simulate-mt", "stream source words through the translator");
    ConfigArgs mt_cfg;
    mt_cfg.attach(mt);
    std::string mt_source, mt_script, mt_gold, mt_events_out;
    mt->add_option("--source", mt_source, "source words: emission JSONL or timed-word TSV")
        ->required();
    mt->add_option("--script", mt_script, "text decoder script TSV")->required();
    mt->add_option("--gold", mt_gold, "gold transcript TSV");
    mt->add_option("--events-out", mt_events_out, "write emission events JSONL");
    mt->callback([&] {
        RunConfig cfg = make_run_config(mt_cfg.kv("mt"));
        std::vector<TimedWord> words = load_words_any(mt_source);
        ScriptedTextDecoder decoder = ScriptedTextDecoder::from_file(mt_script, !cfg.lenient_script);
        std::optional<Transcript> gold = maybe_gold(mt_gold);
        RunResult result = run_mt(words, cfg, decoder, gold ? &*gold : nullptr);
        finish_run(result, mt_events_out, "");
    });

    // ---- simulate-cascade ----
    auto* cas = app.add_subcommand("simulate-cascade", "speech stage feeding the translator");
    ConfigArgs cas_cfg;
    cas_cfg.attach(cas);
    std::string cas_granules, cas_script, cas_mt_script, cas_gold, cas_events_out,
        cas_asr_events_out;
    cas->add_option("--granules", cas_granules, "granule TSV")->required();
    cas->add_option("--script", cas_script, "oracle decoder script TSV")->required();
    cas->add_option("--mt-script", cas_mt_script, "text decoder script TSV")->required();
    cas->add_option("--gold", cas_gold, "gold transcript TSV");
    cas->add_option("--events-out", cas_events_out, "write final emission events JSONL");
    cas->add_option("--asr-events-out", cas_asr_events_out,
                    "write intermediate speech events JSONL");
    cas->callback([&] {
        RunConfig cfg = make_run_config(cas_cfg.kv("cascade"));
        std::vector<Granule> granules = load_granules(cas_granules);
        DiagonalOracleDecoder speech = DiagonalOracleDecoder::from_file(cas_script);
        ScriptedTextDecoder text =
            ScriptedTextDecoder::from_file(cas_mt_script, !cfg.lenient_script);
        std::optional<Transcript> gold = maybe_gold(cas_gold);
        RunResult result = run_cascade(granules, cfg, speech, text, gold ? &*gold : nullptr);
        finish_run(result, cas_events_out, cas_asr_events_out);
    });

    // ---- asr-latency ----
    auto* lat = app.add_subcommand("asr-latency", "align a hypothesis stream against gold timing");
    std::string lat_gold, lat_hyp;
    bool lat_lower = false, lat_per_word = false;
    lat->add_option("--gold", lat_gold, "gold transcript TSV")->required();
    lat->add_option("--hyp", lat_hyp, "hypothesis: emission JSONL or timed-word TSV")->required();
    lat->add_flag("--lowercase", lat_lower, "ASCII-lowercase both sides before aligning");
    lat->add_flag("--per-word", lat_per_word, "print one line per aligned word");
    lat->callback([&] {
        Transcript gold = load_gold_tsv(lat_gold);
        Transcript hyp{load_words_any(lat_hyp)};
        LatencyOptions opts;
        opts.lowercase = lat_lower;
        LatencyReport report = asr_latency(gold, hyp, opts);
        if (lat_per_word)
            for (const WordLatency& w : report.per_word)
                std::cout << hyp.words[(size_t)w.hyp_index].text << "\t" << w.gold_index << "\t"
                          << w.hyp_index << "\t" << format_metric(w.latency_s * 1000.0) << "\n";
        std::cout << "aligned_words = " << report.aligned_count << "\n";
        std::cout << "unaligned_words = " << report.unaligned_count << "\n";
        if (report.mean_latency_s)
            std::cout << "mean_latency_ms = " << format_metric(*report.mean_latency_s * 1000.0)
                      << "\n";
    });

    // ---- wer ----
    auto* wer = app.add_subcommand("wer", "word and character error rate");
    std::string wer_gold, wer_hyp;
    wer->add_option("--gold", wer_gold, "gold transcript TSV")->required();
    wer->add_option("--hyp", wer_hyp, "hypothesis: emission JSONL or timed-word TSV")->required();
    wer->callback([&] {
        Transcript gold = load_gold_tsv(wer_gold);
        std::vector<TimedWord> hyp = load_words_any(wer_hyp);
        std::vector<std::string> gold_texts, hyp_texts;
        for (const TimedWord& w : gold.words) gold_texts.push_back(w.text);
        for (const TimedWord& w : hyp) hyp_texts.push_back(w.text);
        ErrorRateReport wr = word_error_rate(gold_texts, hyp_texts);
        ErrorRateReport cr = char_error_rate(join_words(gold_texts), join_words(hyp_texts));
        std::cout << "substitutions = " << wr.substitutions << "\n";
        std::cout << "deletions = " << wr.deletions << "\n";
        std::cout << "insertions = " << wr.insertions << "\n";
        std::cout << "reference_words = " << wr.reference_length << "\n";
        std::cout << "wer = " << format_metric(wr.rate) << "\n";
        std::cout << "cer = " << format_metric(cr.rate) << "\n";
    });

    // ---- grid-search ----
    auto* grid = app.add_subcommand("grid-search", "run every point of a parameter sweep");
    ConfigArgs grid_cfg;
    grid_cfg.attach(grid);
    std::string grid_sweep, grid_out, grid_granules, grid_script, grid_mt_script, grid_source,
        grid_gold;
    grid->add_option("--sweep", grid_sweep, "sweep file: key = v1,v2,...")->required();
    grid->add_option("--out", grid_out, "results CSV")->required();
    grid->add_option("--granules", grid_granules, "granule TSV");
    grid->add_option("--script", grid_script, "oracle decoder script TSV");
    grid->add_option("--mt-script", grid_mt_script, "text decoder script TSV");
    grid->add_option("--source", grid_source, "MT source words: JSONL or TSV");
    grid->add_option("--gold", grid_gold, "gold transcript TSV");
    grid->callback([&] {
        std::map<std::string, std::string> base = grid_cfg.kv();
        RunConfig base_cfg = make_run_config(base);
        SweepSpec sweep = load_sweep(grid_sweep);

        bool uses_speech = base_cfg.mode != "mt";
        bool uses_text = base_cfg.mode != "s2t";
        if (uses_speech && (grid_granules.empty() || grid_script.empty()))
            throw Error("mode " + base_cfg.mode + " needs --granules and --script");
        if (uses_text && grid_mt_script.empty())
            throw Error("mode " + base_cfg.mode + " needs --mt-script");
        if (base_cfg.mode == "mt" && grid_source.empty())
            throw Error("mode mt needs --source");

        GridInputs inputs;
        if (!grid_granules.empty()) inputs.granules = load_granules(grid_granules);
        if (!grid_script.empty()) inputs.s2t_script = load_oracle_script(grid_script);
        if (!grid_mt_script.empty()) inputs.mt_table = load_mt_table(grid_mt_script);
        if (!grid_source.empty()) inputs.mt_words = load_words_any(grid_source);
        if (!grid_gold.empty()) inputs.gold = load_gold_tsv(grid_gold);

        std::vector<SweepRow> rows = grid_search(sweep, base, inputs);
        write_results_csv(grid_out, sweep, rows, base_cfg.sort_by);
        size_t failed = 0;
        for (const SweepRow& row : rows)
            if (!row.result.error.empty()) ++failed;
        std::cout << "points = " << rows.size() << "\n";
        std::cout << "failed = " << failed << "\n";
    });

    // ---- context-estimate ----
    auto* ctx = app.add_subcommand("context-estimate",
                                   "how much recording fits a model's context window");
    double ctx_src = 0, ctx_tgt = 0, ctx_avg_s = 0;
    long ctx_max = 0;
    ctx->add_option("--src-tokens", ctx_src, "average source tokens per recording")->required();
    ctx->add_option("--tgt-tokens", ctx_tgt, "average target tokens per recording")->required();
    ctx->add_option("--max-tokens", ctx_max, "model context size in tokens")->required();
    ctx->add_option("--avg-duration-s", ctx_avg_s, "average recording duration, seconds")
        ->required();
    ctx->callback([&] {
        ContextEstimate est = max_context_duration(ctx_src, ctx_tgt, ctx_max, ctx_avg_s);
        std::cout << "proportion = " << format_metric(est.proportion) << "\n";
        std::cout << "max_duration_s = " << format_metric(est.duration_s) << "\n";
        std::cout << "max_duration_min = " << format_metric(est.duration_s / 60.0) << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
