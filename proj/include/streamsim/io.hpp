#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "streamsim/core.hpp"
#include "streamsim/s2t_pipeline.hpp"

namespace streamsim {

// Line-based file formats. Times are milliseconds in files, seconds in
// memory. All loaders skip blank lines and lines starting with '#', and
// report errors as "path:line: message".

// TSV columns: start_ms, end_ms, voice_flag (0/1), payload_id (-1 for none)
std::vector<Granule> load_granules(const std::string& path);

// TSV columns: word, start_time_ms; times must be non-decreasing
Transcript load_gold_tsv(const std::string& path);

// JSONL, one object per line: unit, emission_time_ms, source_consumed_until_ms
void write_events_jsonl(const std::string& path, std::span<const EmissionEvent> events);
std::vector<EmissionEvent> load_events_jsonl(const std::string& path);

// split event units on whitespace; every resulting word carries the event's
// emission time
std::vector<TimedWord> words_from_events(std::span<const EmissionEvent> events);

// flat "key = value" config text
std::map<std::string, std::string> load_config_kv(const std::string& path);

// helpers shared by the loaders
std::vector<std::string> read_lines(const std::string& path);
std::vector<std::string> split_tsv(const std::string& line);
double parse_number(const std::string& field, const std::string& where);
long parse_integer(const std::string& field, const std::string& where);

}  // namespace streamsim
