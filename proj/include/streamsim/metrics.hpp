#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streamsim/char_align.hpp"
#include "streamsim/core.hpp"

namespace streamsim {

// ---------- word-level view of a character alignment ----------

struct WordAlignment {
    // hypothesis word index -> gold word index, -1 when the word aligned to
    // nothing (pure insertion)
    std::vector<int> links;
    int aligned_count() const;
    int unaligned_count() const;
};

// Link every hypothesis word to the gold word it shares the most Copy and
// Substitute characters with. Separator spaces belong to no word. Ties go to
// the candidate with more Copies, then to the smaller gold index.
WordAlignment words_from_chars(const CharAlignment& alignment, std::string_view gold,
                               std::string_view hyp);

// ---------- streaming ASR latency ----------

struct WordLatency {
    int hyp_index;
    int gold_index;
    double latency_s;  // hyp emission time minus gold word start time
};

struct LatencyOptions {
    bool lowercase = false;  // ASCII case folding before alignment
    CharAlignOptions align;
};

struct LatencyReport {
    std::vector<WordLatency> per_word;           // aligned words, hyp order
    std::optional<double> mean_latency_s;        // absent when nothing aligned
    int aligned_count = 0;
    int unaligned_count = 0;
};

// Latency of a streaming transcript against a gold one: align the texts at
// character level, lift to word links, then average the per-word emission
// delays. Unaligned hypothesis words are counted but never averaged.
LatencyReport asr_latency(const Transcript& gold, const Transcript& hyp,
                          const LatencyOptions& opts = {});

// ---------- error rates ----------

struct ErrorRateReport {
    long substitutions = 0;
    long deletions = 0;
    long insertions = 0;
    long reference_length = 0;
    double rate = 0.0;  // (S+D+I) / reference_length, may exceed 1
};

// throws Error when the reference is empty
ErrorRateReport word_error_rate(const std::vector<std::string>& gold,
                                const std::vector<std::string>& hyp);
// characters include separator spaces
ErrorRateReport char_error_rate(std::string_view gold, std::string_view hyp);

// ---------- context window sizing ----------

struct ContextEstimate {
    double proportion;  // max_tokens / (src_tokens + tgt_tokens)
    double duration_s;  // proportion * avg_duration_s
};

// How much recording fits into a model's context window, given average token
// counts per recording for the source and target sides.
ContextEstimate max_context_duration(double src_tokens_per_recording,
                                     double tgt_tokens_per_recording, long max_tokens,
                                     double avg_duration_s);

}  // namespace streamsim
