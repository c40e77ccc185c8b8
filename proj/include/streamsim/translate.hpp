#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamsim/core.hpp"

namespace streamsim {

// Incremental text translation with LocalAgreement confirmation: a target
// token becomes visible only once two consecutive updates agree on it, so the
// emitted stream is append-only even when the model keeps rewriting its
// hypothesis.

using TokenCounter = std::function<long(const std::string&)>;

// Whitespace word count; a whitespace-free string containing non-ASCII text
// (CJK without separators) falls back to counting code points.
long default_token_count(const std::string& text);

enum class TrimStrategy { Sentences, Segments };

struct MtConfig {
    int min_chunk_words = 1;       // source words per update
    long max_context_length = 300; // token budget over buffered source + target
    TrimStrategy trimming = TrimStrategy::Segments;
    TokenCounter counter;          // empty -> default_token_count
};

struct PromptTemplate {
    std::string system_text;
    std::string example_source;  // one in-context example pair, both non-empty
    std::string example_target;
};

struct ChatMessage {
    enum class Role { System, User, Assistant };
    Role role;
    std::string text;
};

class TextDecoder {
public:
    virtual ~TextDecoder() = default;
    // full target hypothesis for the buffered source in the chat
    virtual std::string hypothesize(const std::vector<ChatMessage>& chat) = 0;
};

// Source words that arrived in one update, paired with the target text that
// has been confirmed against them so far.
struct SegmentPair {
    std::vector<std::string> source_words;
    std::string target_text;
};

struct TranslationState {
    std::vector<SegmentPair> pairs;
    // hypothesis from the previous update; absent on the first update and
    // after any trim, which forces one extra agreement round
    std::optional<std::vector<std::string>> previous_hypothesis;
    // tail of the newest hypothesis beyond what is confirmed; emitted at the
    // end-of-stream flush
    std::vector<std::string> pending_suffix;
    std::string emitted;  // confirmed output of the whole stream
};

// system, example user/assistant pair, buffered source, confirmed target to
// be continued: always five messages, the last may be empty
std::vector<ChatMessage> assemble_prompt(const TranslationState& state,
                                         const PromptTemplate& prompt);

// longest common prefix of the two hypotheses minus what was already emitted;
// empty when there is no previous hypothesis
std::vector<std::string> local_agreement(
    const std::optional<std::vector<std::string>>& previous,
    const std::vector<std::string>& current, long already_emitted);

// sentence pieces including their terminator; an unterminated tail counts
std::vector<std::string> split_sentences(std::string_view text);

// Drop the leading sentence from both sides while the token budget is
// exceeded, keeping at least one sentence per side. Returns true if anything
// was dropped.
bool trim_sentences(TranslationState& state, const MtConfig& cfg);

// Drop whole leading pairs while over budget, keeping at least one.
bool trim_segments(TranslationState& state, const MtConfig& cfg);

class Translator {
public:
    Translator(MtConfig cfg, PromptTemplate prompt, TextDecoder& decoder);

    // buffer arriving words; every min_chunk_words a translation update runs
    std::vector<EmissionEvent> push_word(const TimedWord& word);

    // flush leftover words, then emit the unconfirmed tail of the last
    // hypothesis: the stream is over, no second agreement will come
    std::vector<EmissionEvent> finish();

    // one forced update with the given words (push_word/finish build on this)
    std::vector<EmissionEvent> translate_update(std::span<const TimedWord> words);

    const TranslationState& state() const { return state_; }

private:
    long confirmed_tokens_in_buffer() const;

    MtConfig cfg_;
    PromptTemplate prompt_;
    TextDecoder& decoder_;
    TranslationState state_;
    std::vector<TimedWord> staged_;  // words waiting for the next update
    double last_time_s_ = 0.0;
};

}  // namespace streamsim
