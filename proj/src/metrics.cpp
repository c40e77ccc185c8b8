#include "streamsim/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <span>

#include "streamsim/text.hpp"

namespace streamsim {

int WordAlignment::aligned_count() const {
    int n = 0;
    for (int v : links)
        if (v >= 0) ++n;
    return n;
}

int WordAlignment::unaligned_count() const { return (int)links.size() - aligned_count(); }

namespace {

// word index per code point, -1 on separator spaces
std::vector<int> word_index_per_char(const std::vector<char32_t>& cps) {
    std::vector<int> idx(cps.size(), -1);
    int word = -1;
    bool in_word = false;
    for (size_t i = 0; i < cps.size(); ++i) {
        if (is_ascii_space(cps[i])) {
            in_word = false;
        } else {
            if (!in_word) ++word;
            in_word = true;
            idx[i] = word;
        }
    }
    return idx;
}

std::string transcript_text(const Transcript& t, const char* what) {
    std::string out;
    for (const auto& w : t.words) {
        if (w.text.empty()) throw Error(std::string(what) + ": empty word in transcript");
        for (char c : w.text)
            if (std::isspace((unsigned char)c))
                throw Error(std::string(what) + ": word '" + w.text + "' contains whitespace");
        if (!out.empty()) out.push_back(' ');
        out += w.text;
    }
    return out;
}

}  // namespace

WordAlignment words_from_chars(const CharAlignment& alignment, std::string_view gold,
                               std::string_view hyp) {
    const auto g = utf8_decode(gold);
    const auto h = utf8_decode(hyp);
    const auto gword = word_index_per_char(g);
    const auto hword = word_index_per_char(h);

    int hyp_words = 0;
    for (int v : hword) hyp_words = std::max(hyp_words, v + 1);

    struct Tally {
        long total = 0;
        long copies = 0;
    };
    std::vector<std::map<int, Tally>> overlap(hyp_words);

    for (const EditOp& op : alignment.ops) {
        if (op.kind != EditKind::Copy && op.kind != EditKind::Substitute) continue;
        const int wh = hword[(size_t)op.hyp_index];
        const int wg = gword[(size_t)op.gold_index];
        if (wh < 0 || wg < 0) continue;  // space characters carry no vote
        Tally& t = overlap[wh][wg];
        ++t.total;
        if (op.kind == EditKind::Copy) ++t.copies;
    }

    WordAlignment out;
    out.links.assign(hyp_words, -1);
    for (int w = 0; w < hyp_words; ++w) {
        long best_total = 0, best_copies = -1;
        // ascending gold index, strict improvement only: full ties keep the
        // smaller gold word
        for (const auto& [gw, t] : overlap[w]) {
            if (t.total > best_total || (t.total == best_total && t.copies > best_copies)) {
                best_total = t.total;
                best_copies = t.copies;
                out.links[w] = gw;
            }
        }
    }
    return out;
}

LatencyReport asr_latency(const Transcript& gold, const Transcript& hyp,
                          const LatencyOptions& opts) {
    std::string gtext = transcript_text(gold, "asr_latency gold");
    std::string htext = transcript_text(hyp, "asr_latency hyp");
    if (opts.lowercase) {
        gtext = ascii_lower(gtext);
        htext = ascii_lower(htext);
    }

    const CharAlignment chars = char_align(gtext, htext, opts.align);
    const WordAlignment words = words_from_chars(chars, gtext, htext);

    LatencyReport report;
    double sum = 0.0;
    for (size_t i = 0; i < words.links.size(); ++i) {
        const int gw = words.links[i];
        if (gw < 0) {
            ++report.unaligned_count;
            continue;
        }
        const double lat = hyp.words[i].time_s - gold.words[(size_t)gw].time_s;
        report.per_word.push_back({(int)i, gw, lat});
        sum += lat;
        ++report.aligned_count;
    }
    if (report.aligned_count > 0) report.mean_latency_s = sum / report.aligned_count;
    return report;
}

namespace {

template <class T>
ErrorRateReport levenshtein_counts(std::span<const T> g, std::span<const T> h) {
    if (g.empty()) throw Error("error rate: reference is empty");
    const size_t cap = CharAlignOptions{}.max_chars;
    if (g.size() > cap || h.size() > cap)
        throw Error("error rate: input exceeds the cap of " + std::to_string(cap) +
                    " units; pre-segment and aggregate");

    const size_t m = g.size(), n = h.size();
    // choice per cell: 0 diagonal, 1 delete, 2 insert
    std::vector<uint8_t> choice((m + 1) * (n + 1), 0);
    std::vector<long> prev(n + 1), cur(n + 1);

    for (size_t j = 0; j <= n; ++j) {
        cur[j] = (long)j;
        if (j) choice[j] = 2;
    }
    for (size_t i = 1; i <= m; ++i) {
        std::swap(prev, cur);
        cur[0] = (long)i;
        choice[i * (n + 1)] = 1;
        for (size_t j = 1; j <= n; ++j) {
            const long diag = prev[j - 1] + (g[i - 1] == h[j - 1] ? 0 : 1);
            const long del = prev[j] + 1;
            const long ins = cur[j - 1] + 1;
            // preference on ties: diagonal, then delete, then insert
            if (diag <= del && diag <= ins) {
                cur[j] = diag;
                choice[i * (n + 1) + j] = 0;
            } else if (del <= ins) {
                cur[j] = del;
                choice[i * (n + 1) + j] = 1;
            } else {
                cur[j] = ins;
                choice[i * (n + 1) + j] = 2;
            }
        }
    }

    ErrorRateReport report;
    report.reference_length = (long)m;
    size_t i = m, j = n;
    while (i > 0 || j > 0) {
        switch (choice[i * (n + 1) + j]) {
            case 0:
                if (g[i - 1] != h[j - 1]) ++report.substitutions;
                --i;
                --j;
                break;
            case 1:
                ++report.deletions;
                --i;
                break;
            default:
                ++report.insertions;
                --j;
                break;
        }
    }
    report.rate =
        double(report.substitutions + report.deletions + report.insertions) / double(m);
    return report;
}

}  // namespace

ErrorRateReport word_error_rate(const std::vector<std::string>& gold,
                                const std::vector<std::string>& hyp) {
    return levenshtein_counts<std::string>(gold, hyp);
}

ErrorRateReport char_error_rate(std::string_view gold, std::string_view hyp) {
    const auto g = utf8_decode(gold);
    const auto h = utf8_decode(hyp);
    return levenshtein_counts<char32_t>(g, h);
}

ContextEstimate max_context_duration(double src_tokens_per_recording,
                                     double tgt_tokens_per_recording, long max_tokens,
                                     double avg_duration_s) {
    if (!(src_tokens_per_recording > 0.0) || !(tgt_tokens_per_recording > 0.0))
        throw Error("max_context_duration: token counts must be positive");
    if (max_tokens <= 0) throw Error("max_context_duration: max_tokens must be positive");
    if (!(avg_duration_s > 0.0)) throw Error("max_context_duration: duration must be positive");
    ContextEstimate est{};
    est.proportion =
        (double)max_tokens / (src_tokens_per_recording + tgt_tokens_per_recording);
    est.duration_s = est.proportion * avg_duration_s;
    return est;
}

}  // namespace streamsim
