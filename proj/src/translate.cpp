#include "streamsim/translate.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "streamsim/text.hpp"

namespace streamsim {

long default_token_count(const std::string& text) {
    bool has_ws = false, has_non_ascii = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) has_ws = true;
        if (c >= 0x80) has_non_ascii = true;
    }
    if (!has_ws && has_non_ascii) return count_codepoints(text);
    return (long)split_words(text).size();
}

namespace {

long count_tokens(const MtConfig& cfg, const std::string& text) {
    return cfg.counter ? cfg.counter(text) : default_token_count(text);
}

bool is_terminator(char32_t cp) {
    return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'。' || cp == U'！' ||
           cp == U'？';
}

std::string flat_source(const TranslationState& state) {
    std::string out;
    for (const SegmentPair& p : state.pairs) {
        const std::string s = join_words(p.source_words);
        if (s.empty()) continue;
        if (!out.empty()) out.push_back(' ');
        out += s;
    }
    return out;
}

std::string flat_target(const TranslationState& state) {
    std::string out;
    for (const SegmentPair& p : state.pairs) {
        if (p.target_text.empty()) continue;
        if (!out.empty()) out.push_back(' ');
        out += p.target_text;
    }
    return out;
}

void append_text(std::string& dst, const std::string& piece) {
    if (piece.empty()) return;
    if (!dst.empty()) dst.push_back(' ');
    dst += piece;
}

void check_prompt(const PromptTemplate& prompt) {
    if (prompt.example_source.empty() || prompt.example_target.empty())
        throw Error("prompt template: the in-context example pair must be non-empty");
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
    const auto cps = utf8_decode(text);
    std::vector<std::string> sentences;
    std::vector<char32_t> cur;
    for (size_t i = 0; i < cps.size(); ++i) {
        const char32_t cp = cps[i];
        if (is_ascii_space(cp) && cur.empty()) continue;  // separator whitespace
        cur.push_back(cp);
        // a terminator followed by whitespace or the end closes a sentence;
        // the terminator stays with the sentence before it
        if (is_terminator(cp) && (i + 1 == cps.size() || is_ascii_space(cps[i + 1]))) {
            while (!cur.empty() && is_ascii_space(cur.back())) cur.pop_back();
            if (!cur.empty()) sentences.push_back(utf8_encode(cur));
            cur.clear();
        }
    }
    while (!cur.empty() && is_ascii_space(cur.back())) cur.pop_back();
    if (!cur.empty()) sentences.push_back(utf8_encode(cur));  // unterminated tail
    return sentences;
}

std::vector<ChatMessage> assemble_prompt(const TranslationState& state,
                                         const PromptTemplate& prompt) {
    check_prompt(prompt);
    using Role = ChatMessage::Role;
    return {
        {Role::System, prompt.system_text},
        {Role::User, prompt.example_source},
        {Role::Assistant, prompt.example_target},
        {Role::User, flat_source(state)},
        {Role::Assistant, flat_target(state)},  // continued by the decoder
    };
}

std::vector<std::string> local_agreement(
    const std::optional<std::vector<std::string>>& previous,
    const std::vector<std::string>& current, long already_emitted) {
    if (!previous.has_value()) return {};  // nothing to agree with yet
    size_t lcp = 0;
    while (lcp < previous->size() && lcp < current.size() &&
           (*previous)[lcp] == current[lcp])
        ++lcp;
    const size_t from = std::min((size_t)std::max(already_emitted, 0L), lcp);
    return {current.begin() + (long)from, current.begin() + (long)lcp};
}

bool trim_sentences(TranslationState& state, const MtConfig& cfg) {
    std::string src = flat_source(state);
    std::string tgt = flat_target(state);
    bool trimmed = false;
    for (;;) {
        if (count_tokens(cfg, src) + count_tokens(cfg, tgt) <= cfg.max_context_length) break;
        const auto src_sents = split_sentences(src);
        const auto tgt_sents = split_sentences(tgt);
        if (src_sents.size() < 2 || tgt_sents.size() < 2) break;  // keep one per side
        src = join_words(std::span(src_sents).subspan(1));
        tgt = join_words(std::span(tgt_sents).subspan(1));
        trimmed = true;
    }
    if (trimmed) {
        // sentence boundaries cut across arrival pairs; collapse to one
        state.pairs = {{split_words(src), tgt}};
    }
    return trimmed;
}

bool trim_segments(TranslationState& state, const MtConfig& cfg) {
    auto pair_cost = [&](const SegmentPair& p) {
        return count_tokens(cfg, join_words(p.source_words)) +
               count_tokens(cfg, p.target_text);
    };
    long total = 0;
    for (const SegmentPair& p : state.pairs) total += pair_cost(p);
    bool trimmed = false;
    while (state.pairs.size() > 1 && total > cfg.max_context_length) {
        total -= pair_cost(state.pairs.front());
        state.pairs.erase(state.pairs.begin());
        trimmed = true;
    }
    return trimmed;
}

Translator::Translator(MtConfig cfg, PromptTemplate prompt, TextDecoder& decoder)
    : cfg_(std::move(cfg)), prompt_(std::move(prompt)), decoder_(decoder) {
    if (cfg_.min_chunk_words < 1) throw Error("translator: min_chunk_words must be >= 1");
    if (cfg_.max_context_length < 1)
        throw Error("translator: max_context_length must be >= 1");
    check_prompt(prompt_);
}

long Translator::confirmed_tokens_in_buffer() const {
    long n = 0;
    for (const SegmentPair& p : state_.pairs) n += (long)split_words(p.target_text).size();
    return n;
}

std::vector<EmissionEvent> Translator::push_word(const TimedWord& word) {
    if (word.text.empty()) throw Error("translator: empty source word");
    for (char c : word.text)
        if (std::isspace((unsigned char)c))
            throw Error("translator: source word '" + word.text + "' contains whitespace");
    if (word.time_s < last_time_s_ - 1e-9)
        throw Error("translator: source word times must be non-decreasing");
    last_time_s_ = word.time_s;
    staged_.push_back(word);
    if ((int)staged_.size() < cfg_.min_chunk_words) return {};
    std::vector<TimedWord> batch = std::move(staged_);
    staged_.clear();
    return translate_update(batch);
}

std::vector<EmissionEvent> Translator::translate_update(std::span<const TimedWord> words) {
    if (words.empty()) return {};
    const double now = words.back().time_s;

    TranslationState next = state_;  // decoder failure leaves the state untouched
    SegmentPair pair;
    for (const TimedWord& w : words) pair.source_words.push_back(w.text);
    next.pairs.push_back(std::move(pair));

    const std::string hyp_text = decoder_.hypothesize(assemble_prompt(next, prompt_));
    const std::vector<std::string> hyp = split_words(hyp_text);

    long already = 0;
    for (const SegmentPair& p : next.pairs) already += (long)split_words(p.target_text).size();

    const std::vector<std::string> confirmed =
        local_agreement(next.previous_hypothesis, hyp, already);

    std::vector<EmissionEvent> events;
    for (const std::string& tok : confirmed) {
        append_text(next.pairs.back().target_text, tok);
        append_text(next.emitted, tok);
        events.push_back({tok, unaware_clock_stamp(now), now});
    }
    const size_t consumed = std::min((size_t)already + confirmed.size(), hyp.size());
    next.pending_suffix.assign(hyp.begin() + (long)consumed, hyp.end());
    next.previous_hypothesis = hyp;

    const bool trimmed = cfg_.trimming == TrimStrategy::Sentences ? trim_sentences(next, cfg_)
                                                                  : trim_segments(next, cfg_);
    if (trimmed) next.previous_hypothesis.reset();  // force one fresh agreement round

    state_ = std::move(next);
    return events;
}

std::vector<EmissionEvent> Translator::finish() {
    std::vector<EmissionEvent> events;
    if (!staged_.empty()) {
        std::vector<TimedWord> batch = std::move(staged_);
        staged_.clear();
        events = translate_update(batch);
    }
    // no further update will come to second the last hypothesis; emit its
    // unconfirmed tail as-is
    for (const std::string& tok : state_.pending_suffix) {
        if (!state_.pairs.empty()) append_text(state_.pairs.back().target_text, tok);
        append_text(state_.emitted, tok);
        events.push_back({tok, unaware_clock_stamp(last_time_s_), last_time_s_});
    }
    state_.pending_suffix.clear();
    return events;
}

}  // namespace streamsim
