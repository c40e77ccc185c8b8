#include "streamsim/io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "streamsim/text.hpp"

namespace streamsim {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> split_tsv(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    for (;;) {
        const size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

double parse_number(const std::string& field, const std::string& where) {
    try {
        size_t pos = 0;
        const double v = std::stod(field, &pos);
        if (pos != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw Error(where + ": expected a number, got '" + field + "'");
    }
}

long parse_integer(const std::string& field, const std::string& where) {
    try {
        size_t pos = 0;
        const long v = std::stol(field, &pos);
        if (pos != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw Error(where + ": expected an integer, got '" + field + "'");
    }
}

namespace {

bool skippable(const std::string& line) {
    for (char c : line)
        if (!std::isspace((unsigned char)c)) return c == '#';
    return true;
}

std::string at(const std::string& path, size_t lineno) {
    return path + ":" + std::to_string(lineno);
}

}  // namespace

std::vector<Granule> load_granules(const std::string& path) {
    const auto lines = read_lines(path);
    std::vector<Granule> out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) continue;
        const auto f = split_tsv(lines[i]);
        if (f.size() != 4)
            throw Error(at(path, i + 1) +
                        ": expected start_ms, end_ms, voice_flag, payload_id");
        Granule g;
        g.start_s = parse_number(f[0], at(path, i + 1)) / 1000.0;
        g.end_s = parse_number(f[1], at(path, i + 1)) / 1000.0;
        const long flag = parse_integer(f[2], at(path, i + 1));
        if (flag != 0 && flag != 1)
            throw Error(at(path, i + 1) + ": voice_flag must be 0 or 1");
        g.voice = flag == 1;
        g.payload_id = (int)parse_integer(f[3], at(path, i + 1));
        out.push_back(g);
    }
    return out;
}

Transcript load_gold_tsv(const std::string& path) {
    const auto lines = read_lines(path);
    Transcript t;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) continue;
        const auto f = split_tsv(lines[i]);
        if (f.size() != 2) throw Error(at(path, i + 1) + ": expected word, start_time_ms");
        TimedWord w;
        w.text = normalize_whitespace(f[0]);
        if (w.text.empty() || w.text.find(' ') != std::string::npos)
            throw Error(at(path, i + 1) + ": expected a single non-empty word");
        w.time_s = parse_number(f[1], at(path, i + 1)) / 1000.0;
        if (!t.words.empty() && w.time_s < t.words.back().time_s - 1e-9)
            throw Error(at(path, i + 1) + ": word times must be non-decreasing");
        t.words.push_back(std::move(w));
    }
    return t;
}

void write_events_jsonl(const std::string& path, std::span<const EmissionEvent> events) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(path + ": cannot write");
    for (const EmissionEvent& ev : events) {
        nlohmann::ordered_json j;
        j["unit"] = ev.unit;
        // milliseconds, rounded to a thousandth so grid-aligned times print
        // cleanly and reruns stay byte-identical
        j["emission_time_ms"] = std::round(ev.emission_time_s * 1e6) / 1e3;
        j["source_consumed_until_ms"] = std::round(ev.source_consumed_until_s * 1e6) / 1e3;
        out << j.dump() << '\n';
    }
    if (!out.flush()) throw Error(path + ": write failed");
}

std::vector<EmissionEvent> load_events_jsonl(const std::string& path) {
    const auto lines = read_lines(path);
    std::vector<EmissionEvent> out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const std::exception& e) {
            throw Error(at(path, i + 1) + ": bad JSON: " + e.what());
        }
        if (!j.contains("unit") || !j.contains("emission_time_ms") ||
            !j.contains("source_consumed_until_ms"))
            throw Error(at(path, i + 1) +
                        ": expected unit, emission_time_ms, source_consumed_until_ms");
        EmissionEvent ev;
        ev.unit = j["unit"].get<std::string>();
        ev.emission_time_s = j["emission_time_ms"].get<double>() / 1000.0;
        ev.source_consumed_until_s = j["source_consumed_until_ms"].get<double>() / 1000.0;
        if (!out.empty() && ev.emission_time_s < out.back().emission_time_s - 1e-9)
            throw Error(at(path, i + 1) + ": emission times must be non-decreasing");
        out.push_back(std::move(ev));
    }
    return out;
}

std::vector<TimedWord> words_from_events(std::span<const EmissionEvent> events) {
    std::vector<TimedWord> words;
    for (const EmissionEvent& ev : events)
        for (const std::string& w : split_words(ev.unit))
            words.push_back({w, ev.emission_time_s});
    return words;
}

std::map<std::string, std::string> load_config_kv(const std::string& path) {
    const auto lines = read_lines(path);
    std::map<std::string, std::string> kv;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) continue;
        const size_t eq = lines[i].find('=');
        if (eq == std::string::npos)
            throw Error(at(path, i + 1) + ": expected 'key = value'");
        std::string key = normalize_whitespace(lines[i].substr(0, eq));
        std::string value = normalize_whitespace(lines[i].substr(eq + 1));
        if (key.empty() || key.find(' ') != std::string::npos)
            throw Error(at(path, i + 1) + ": bad key '" + key + "'");
        if (kv.count(key)) throw Error(at(path, i + 1) + ": duplicate key '" + key + "'");
        kv[key] = std::move(value);
    }
    return kv;
}

}  // namespace streamsim
