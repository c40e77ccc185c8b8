#include "streamsim/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <utility>

#include "streamsim/io.hpp"
#include "streamsim/text.hpp"

namespace streamsim {

namespace {

std::string trim_copy(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && is_ascii_space(s[b])) ++b;
    while (e > b && is_ascii_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

double want_double(const std::map<std::string, std::string>& kv, const std::string& key) {
    const std::string& raw = kv.at(key);
    char* end = nullptr;
    double value = std::strtod(raw.c_str(), &end);
    if (raw.empty() || end != raw.c_str() + raw.size())
        throw Error("config key '" + key + "': expected a number, got '" + raw + "'");
    return value;
}

long want_long(const std::map<std::string, std::string>& kv, const std::string& key) {
    const std::string& raw = kv.at(key);
    char* end = nullptr;
    long value = std::strtol(raw.c_str(), &end, 10);
    if (raw.empty() || end != raw.c_str() + raw.size())
        throw Error("config key '" + key + "': expected an integer, got '" + raw + "'");
    return value;
}

bool want_bool(const std::map<std::string, std::string>& kv, const std::string& key) {
    const std::string& raw = kv.at(key);
    if (raw == "true" || raw == "1") return true;
    if (raw == "false" || raw == "0") return false;
    throw Error("config key '" + key + "': expected true or false, got '" + raw + "'");
}

void require_positive(double value, const std::string& key) {
    if (!(value > 0.0)) throw Error("config key '" + key + "' must be positive");
}

void require_at_least(long value, long floor, const std::string& key) {
    if (value < floor)
        throw Error("config key '" + key + "' must be at least " + std::to_string(floor));
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_key_defaults() {
    static const std::vector<std::pair<std::string, std::string>> table = {
        {"mode", "s2t"},
        {"frame_rate", "50"},
        {"min_chunk_size_s", "1"},
        {"buffer_length_s", "30"},
        {"max_context_length", "0"},
        {"static_prompt", "true"},
        {"prompt", ""},
        {"frames", "4"},
        {"final_frames", "4"},
        {"beams", "1"},
        {"max_tokens_per_update", "200"},
        {"vad_granule_s", "0.04"},
        {"vad_min_silence_s", "0.5"},
        {"vad_voice_pad_s", "0.1"},
        {"mt_min_chunk_words", "1"},
        {"mt_max_context", "300"},
        {"mt_trimming", "segments"},
        {"system_prompt", "Translate the text and continue the previous translation if any."},
        {"example_source", "Hello."},
        {"example_target", "Hallo."},
        {"lenient_script", "false"},
        {"sort_by", "mean_latency_ms"},
    };
    return table;
}

std::map<std::string, std::string> merged_config_kv(
    const std::map<std::string, std::string>& overrides) {
    std::map<std::string, std::string> merged;
    for (const auto& [key, value] : config_key_defaults()) merged[key] = value;
    for (const auto& [key, value] : overrides) {
        if (!merged.count(key)) throw Error("unknown config key '" + key + "'");
        merged[key] = value;
    }
    return merged;
}

RunConfig make_run_config(const std::map<std::string, std::string>& kv) {
    std::map<std::string, std::string> merged = merged_config_kv(kv);
    RunConfig cfg;

    cfg.mode = merged.at("mode");
    if (cfg.mode != "s2t" && cfg.mode != "mt" && cfg.mode != "cascade")
        throw Error("config key 'mode' must be s2t, mt or cascade, got '" + cfg.mode + "'");

    cfg.s2t.frame_rate = want_double(merged, "frame_rate");
    require_positive(cfg.s2t.frame_rate, "frame_rate");
    cfg.s2t.min_chunk_size_s = want_double(merged, "min_chunk_size_s");
    require_positive(cfg.s2t.min_chunk_size_s, "min_chunk_size_s");
    cfg.s2t.buffer_length_s = want_double(merged, "buffer_length_s");
    require_positive(cfg.s2t.buffer_length_s, "buffer_length_s");
    long max_context = want_long(merged, "max_context_length");
    require_at_least(max_context, 0, "max_context_length");
    cfg.s2t.max_context_length = (int)max_context;
    cfg.s2t.static_prompt = want_bool(merged, "static_prompt");
    cfg.s2t.prompt_text = merged.at("prompt");

    long frames = want_long(merged, "frames");
    require_at_least(frames, 1, "frames");
    cfg.s2t.alignatt.frames_threshold = (int)frames;
    long final_frames = want_long(merged, "final_frames");
    require_at_least(final_frames, 1, "final_frames");
    cfg.s2t.alignatt.final_frames_threshold = (int)final_frames;
    long beams = want_long(merged, "beams");
    require_at_least(beams, 1, "beams");
    cfg.s2t.alignatt.beams = (int)beams;
    long budget = want_long(merged, "max_tokens_per_update");
    require_at_least(budget, 1, "max_tokens_per_update");
    cfg.s2t.alignatt.max_tokens_per_update = (int)budget;

    cfg.s2t.vad.granule_s = want_double(merged, "vad_granule_s");
    require_positive(cfg.s2t.vad.granule_s, "vad_granule_s");
    cfg.s2t.vad.min_silence_s = want_double(merged, "vad_min_silence_s");
    require_positive(cfg.s2t.vad.min_silence_s, "vad_min_silence_s");
    cfg.s2t.vad.voice_pad_s = want_double(merged, "vad_voice_pad_s");
    require_positive(cfg.s2t.vad.voice_pad_s, "vad_voice_pad_s");

    long chunk_words = want_long(merged, "mt_min_chunk_words");
    require_at_least(chunk_words, 1, "mt_min_chunk_words");
    cfg.mt.min_chunk_words = (int)chunk_words;
    cfg.mt.max_context_length = want_long(merged, "mt_max_context");
    require_at_least(cfg.mt.max_context_length, 1, "mt_max_context");
    const std::string& trimming = merged.at("mt_trimming");
    if (trimming == "sentences")
        cfg.mt.trimming = TrimStrategy::Sentences;
    else if (trimming == "segments")
        cfg.mt.trimming = TrimStrategy::Segments;
    else
        throw Error("config key 'mt_trimming' must be sentences or segments, got '" + trimming +
                    "'");

    cfg.prompt.system_text = merged.at("system_prompt");
    cfg.prompt.example_source = merged.at("example_source");
    cfg.prompt.example_target = merged.at("example_target");
    if (cfg.prompt.example_source.empty() || cfg.prompt.example_target.empty())
        throw Error("config keys 'example_source' and 'example_target' must be non-empty");

    cfg.lenient_script = want_bool(merged, "lenient_script");
    cfg.sort_by = merged.at("sort_by");
    if (cfg.sort_by.empty()) throw Error("config key 'sort_by' must be non-empty");
    return cfg;
}

std::set<int> voiced_payloads(std::span<const Granule> granules) {
    std::set<int> ids;
    for (const Granule& g : granules)
        if (g.voice && g.payload_id >= 0) ids.insert(g.payload_id);
    return ids;
}

namespace {

std::vector<std::pair<std::string, std::string>> config_snapshot(
    const std::map<std::string, std::string>& merged) {
    std::vector<std::pair<std::string, std::string>> snapshot;
    snapshot.reserve(config_key_defaults().size());
    for (const auto& [key, unused] : config_key_defaults()) snapshot.emplace_back(key, merged.at(key));
    return snapshot;
}

// event counts always; alignment quality only when a gold transcript is given
void quality_metrics(std::map<std::string, double>& metrics, const std::string& prefix,
                     std::span<const EmissionEvent> events, const Transcript* gold) {
    std::vector<TimedWord> words = words_from_events(events);
    metrics[prefix + "events"] = (double)events.size();
    metrics[prefix + "words"] = (double)words.size();
    if (!gold || gold->words.empty()) return;

    Transcript hyp{words};
    LatencyReport report = asr_latency(*gold, hyp);
    if (report.mean_latency_s)
        metrics[prefix + "mean_latency_ms"] = *report.mean_latency_s * 1000.0;
    metrics[prefix + "aligned_words"] = report.aligned_count;
    metrics[prefix + "unaligned_words"] = report.unaligned_count;

    std::vector<std::string> gold_texts, hyp_texts;
    gold_texts.reserve(gold->words.size());
    for (const TimedWord& w : gold->words) gold_texts.push_back(w.text);
    hyp_texts.reserve(words.size());
    for (const TimedWord& w : words) hyp_texts.push_back(w.text);
    metrics[prefix + "wer"] = word_error_rate(gold_texts, hyp_texts).rate;
    metrics[prefix + "cer"] = char_error_rate(join_words(gold_texts), join_words(hyp_texts)).rate;
}

}  // namespace

RunResult run_s2t(std::span<const Granule> granules, const RunConfig& cfg,
                  IncrementalDecoder& decoder, const Transcript* gold) {
    if (!cfg.lenient_script)
        if (auto* oracle = dynamic_cast<const DiagonalOracleDecoder*>(&decoder))
            oracle->require_payloads(voiced_payloads(granules));

    std::vector<VadEvent> vad_events = vad_gate(granules, cfg.s2t.vad);
    std::vector<ChunkEvent> chunks =
        accumulate(vad_events, cfg.s2t.min_chunk_size_s, cfg.s2t.frame_rate);

    S2tPipeline pipeline(cfg.s2t, decoder);
    EventLog log;
    for (const ChunkEvent& ce : chunks) {
        std::vector<EmissionEvent> out =
            ce.chunk ? pipeline.process_chunk(*ce.chunk, ce.is_final) : pipeline.finalize();
        for (const EmissionEvent& ev : out) log.append(ev);
    }

    RunResult result;
    result.events = log.events();
    quality_metrics(result.metrics, "", result.events, gold);
    return result;
}

RunResult run_mt(std::span<const TimedWord> words, const RunConfig& cfg, TextDecoder& decoder,
                 const Transcript* gold) {
    Translator translator(cfg.mt, cfg.prompt, decoder);
    EventLog log;
    for (const TimedWord& word : words)
        for (const EmissionEvent& ev : translator.push_word(word)) log.append(ev);
    for (const EmissionEvent& ev : translator.finish()) log.append(ev);

    RunResult result;
    result.events = log.events();
    quality_metrics(result.metrics, "", result.events, gold);
    return result;
}

RunResult run_cascade(std::span<const Granule> granules, const RunConfig& cfg,
                      IncrementalDecoder& speech_decoder, TextDecoder& text_decoder,
                      const Transcript* gold) {
    RunResult speech = run_s2t(granules, cfg, speech_decoder, gold);
    std::vector<TimedWord> words = words_from_events(speech.events);

    RunResult result = run_mt(words, cfg, text_decoder, gold);
    result.asr_events = std::move(speech.events);
    for (const auto& [key, value] : speech.metrics) result.metrics["asr_" + key] = value;
    return result;
}

SweepSpec load_sweep(const std::string& path) {
    SweepSpec sweep;
    std::vector<std::string> lines = read_lines(path);
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string where = path + ":" + std::to_string(i + 1);
        std::string line = trim_copy(lines[i]);
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) throw Error(where + ": expected 'name = v1,v2,...'");
        std::string name = trim_copy(line.substr(0, eq));
        std::string rest = line.substr(eq + 1);
        const auto& table = config_key_defaults();
        bool known = std::any_of(table.begin(), table.end(),
                                 [&](const auto& kd) { return kd.first == name; });
        if (!known) throw Error(where + ": unknown config key '" + name + "'");
        for (const auto& [existing, unused] : sweep.params)
            if (existing == name) throw Error(where + ": duplicate parameter '" + name + "'");

        std::vector<std::string> values;
        size_t start = 0;
        while (start <= rest.size()) {
            size_t comma = rest.find(',', start);
            std::string piece =
                trim_copy(rest.substr(start, comma == std::string::npos ? comma : comma - start));
            values.push_back(piece);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (values.empty() || std::any_of(values.begin(), values.end(),
                                          [](const std::string& v) { return v.empty(); }))
            throw Error(where + ": empty value in parameter '" + name + "'");
        sweep.params.emplace_back(std::move(name), std::move(values));
    }
    if (sweep.params.empty()) throw Error(path + ": sweep defines no parameters");
    return sweep;
}

std::vector<SweepRow> grid_search(const SweepSpec& sweep,
                                  const std::map<std::string, std::string>& base_kv,
                                  const GridInputs& inputs) {
    merged_config_kv(base_kv);  // reject unknown base keys before spawning work

    size_t total = 1;
    for (const auto& [name, values] : sweep.params) total *= values.size();

    std::vector<SweepRow> rows(total);
    // strides make the first parameter vary slowest
    std::vector<size_t> strides(sweep.params.size(), 1);
    for (size_t j = sweep.params.size(); j-- > 1;)
        strides[j - 1] = strides[j] * sweep.params[j].second.size();
    for (size_t i = 0; i < total; ++i) {
        rows[i].values.resize(sweep.params.size());
        for (size_t j = 0; j < sweep.params.size(); ++j) {
            const auto& values = sweep.params[j].second;
            rows[i].values[j] = values[(i / strides[j]) % values.size()];
        }
    }

    const Transcript* gold = inputs.gold ? &*inputs.gold : nullptr;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < (long)total; ++i) {
        try {
            std::map<std::string, std::string> kv = base_kv;
            for (size_t j = 0; j < sweep.params.size(); ++j)
                kv[sweep.params[j].first] = rows[i].values[j];
            RunConfig cfg = make_run_config(kv);

            DiagonalOracleDecoder speech(inputs.s2t_script);
            ScriptedTextDecoder text(inputs.mt_table, !cfg.lenient_script);

            RunResult result;
            if (cfg.mode == "s2t")
                result = run_s2t(inputs.granules, cfg, speech, gold);
            else if (cfg.mode == "mt")
                result = run_mt(inputs.mt_words, cfg, text, gold);
            else
                result = run_cascade(inputs.granules, cfg, speech, text, gold);
            result.config = config_snapshot(merged_config_kv(kv));
            rows[i].result = std::move(result);
        } catch (const std::exception& e) {
            rows[i].result.error = e.what();
        }
    }
    return rows;
}

std::string format_metric(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

namespace {

std::string csv_field(const std::string& raw) {
    if (raw.find_first_of(",\"\r\n") == std::string::npos) return raw;
    std::string quoted = "\"";
    for (char c : raw) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

void write_results_csv(const std::string& path, const SweepSpec& sweep,
                       std::span<const SweepRow> rows, const std::string& sort_by) {
    std::set<std::string> metric_keys;
    for (const SweepRow& row : rows)
        for (const auto& [key, unused] : row.result.metrics) metric_keys.insert(key);

    std::vector<size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    auto metric_of = [&](size_t i) -> std::optional<double> {
        auto it = rows[i].result.metrics.find(sort_by);
        if (it == rows[i].result.metrics.end()) return std::nullopt;
        return it->second;
    };
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        std::optional<double> va = metric_of(a), vb = metric_of(b);
        if (va && vb) return *va < *vb;
        return va.has_value() && !vb.has_value();
    });

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");

    std::vector<std::string> header;
    for (const auto& [name, unused] : sweep.params) header.push_back(name);
    header.insert(header.end(), metric_keys.begin(), metric_keys.end());
    header.push_back("error");
    for (size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << csv_field(header[c]);
    out << "\n";

    for (size_t i : order) {
        const SweepRow& row = rows[i];
        size_t c = 0;
        for (const std::string& value : row.values) out << (c++ ? "," : "") << csv_field(value);
        for (const std::string& key : metric_keys) {
            auto it = row.result.metrics.find(key);
            out << (c++ ? "," : "") << (it == row.result.metrics.end() ? "" : format_metric(it->second));
        }
        out << (c++ ? "," : "") << csv_field(row.result.error) << "\n";
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace streamsim
