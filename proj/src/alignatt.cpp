#include "streamsim/alignatt.hpp"

#include <algorithm>
#include <memory>
#include <utility>

namespace streamsim {

int most_attended_frame(const AttentionSnapshot& snapshot) {
    if (snapshot.weights.empty()) throw Error("most_attended_frame: empty snapshot");
    // max_element keeps the first maximum, which is the lowest frame index
    const auto it = std::max_element(snapshot.weights.begin(), snapshot.weights.end());
    return (int)(it - snapshot.weights.begin());
}

bool crosses_threshold(int frame, int total_frames, int threshold) {
    if (total_frames < 1) throw Error("crosses_threshold: total_frames must be >= 1");
    if (frame < 0 || frame >= total_frames)
        throw Error("crosses_threshold: frame out of range");
    if (threshold < 1) throw Error("crosses_threshold: threshold must be >= 1");
    return frame >= total_frames - threshold;
}

namespace {

void check_config(const AlignAttConfig& cfg, const AudioWindow& window) {
    if (cfg.frames_threshold < 1 || cfg.final_frames_threshold < 1)
        throw Error("alignatt: thresholds must be >= 1");
    if (cfg.beams < 1) throw Error("alignatt: beams must be >= 1");
    if (cfg.max_tokens_per_update < 1) throw Error("alignatt: token budget must be >= 1");
    if (window.frames() < 1) throw Error("alignatt: empty audio window");
}

// score descending, end tokens before text tokens, then text ascending;
// keeps candidate selection deterministic for any decoder
bool candidate_better(const DecodedToken& a, const DecodedToken& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.is_end != b.is_end) return a.is_end;
    return a.text < b.text;
}

struct Beam {
    std::unique_ptr<DecoderSession> session;  // null once finished
    std::vector<DecodedToken> tokens;
    double score = 0.0;
    bool finished = false;
    std::string path_key;  // token texts joined with a separator byte
};

bool beam_better(const Beam& a, const Beam& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.path_key != b.path_key) return a.path_key < b.path_key;
    return a.finished && !b.finished;
}

// Emitted tokens must all lie before the threshold. The stop trigger only
// inspects the top beam's newest token, so if the top beam changed along the
// way an earlier uninspected token could cross; cut there.
std::vector<DecodedToken> truncate_at_crossing(const std::vector<DecodedToken>& tokens,
                                               int total_frames, int threshold) {
    std::vector<DecodedToken> out;
    for (const DecodedToken& tok : tokens) {
        const int frame = most_attended_frame(tok.attention);
        if (crosses_threshold(frame, total_frames, threshold)) break;
        out.push_back(tok);
    }
    return out;
}

}  // namespace

PolicyOutcome alignatt_decode_greedy(IncrementalDecoder& decoder, const AudioWindow& window,
                                     const std::vector<std::string>& prompt,
                                     const std::vector<std::string>& context,
                                     const std::vector<std::string>& forced_prefix,
                                     const AlignAttConfig& cfg, bool is_final) {
    check_config(cfg, window);
    const int threshold = is_final ? cfg.final_frames_threshold : cfg.frames_threshold;
    const int total = window.frames();

    auto session = decoder.begin_buffer(window, prompt, context, forced_prefix);
    PolicyOutcome out;
    for (;;) {
        std::vector<DecodedToken> cands = session->step();
        if (cands.empty()) {
            out.stop_reason = StopReason::EndToken;
            return out;
        }
        const DecodedToken best =
            *std::min_element(cands.begin(), cands.end(),
                              [](const DecodedToken& a, const DecodedToken& b) {
                                  return candidate_better(a, b);
                              });
        if (best.is_end) {
            out.stop_reason = StopReason::EndToken;
            return out;
        }
        const int frame = most_attended_frame(best.attention);
        if (crosses_threshold(frame, total, threshold)) {
            // discarded, not emitted: the next update re-derives it through
            // the forced prefix once more audio has arrived
            out.stop_reason = StopReason::ThresholdCrossed;
            return out;
        }
        out.emitted.push_back(best);
        session->advance(best);
        if ((int)out.emitted.size() >= cfg.max_tokens_per_update) {
            out.stop_reason = StopReason::TokenBudget;
            return out;
        }
    }
}

PolicyOutcome alignatt_decode_beam(IncrementalDecoder& decoder, const AudioWindow& window,
                                   const std::vector<std::string>& prompt,
                                   const std::vector<std::string>& context,
                                   const std::vector<std::string>& forced_prefix,
                                   const AlignAttConfig& cfg, bool is_final) {
    check_config(cfg, window);
    const int threshold = is_final ? cfg.final_frames_threshold : cfg.frames_threshold;
    const int total = window.frames();

    std::vector<Beam> beams;
    {
        Beam root;
        root.session = decoder.begin_buffer(window, prompt, context, forced_prefix);
        beams.push_back(std::move(root));
    }

    PolicyOutcome out;
    for (int round = 0; round < cfg.max_tokens_per_update; ++round) {
        std::vector<Beam> pool;
        for (Beam& b : beams) {
            if (b.finished) {
                pool.push_back(std::move(b));
                continue;
            }
            std::vector<DecodedToken> cands = b.session->step();
            if (cands.empty()) {
                b.finished = true;
                b.session.reset();
                pool.push_back(std::move(b));
                continue;
            }
            for (const DecodedToken& cand : cands) {
                Beam child;
                child.tokens = b.tokens;
                child.score = b.score + cand.score;
                child.path_key = b.path_key;
                if (cand.is_end) {
                    child.finished = true;
                } else {
                    child.session = b.session->fork();
                    child.session->advance(cand);
                    child.tokens.push_back(cand);
                    child.path_key += '\x1f';
                    child.path_key += cand.text;
                }
                pool.push_back(std::move(child));
            }
        }

        std::sort(pool.begin(), pool.end(),
                  [](const Beam& a, const Beam& b) { return beam_better(a, b); });
        if ((int)pool.size() > cfg.beams) pool.resize((size_t)cfg.beams);
        beams = std::move(pool);

        const Beam& top = beams.front();
        if (top.finished) {
            out.emitted = truncate_at_crossing(top.tokens, total, threshold);
            out.stop_reason = StopReason::EndToken;
            return out;
        }
        const int frame = most_attended_frame(top.tokens.back().attention);
        if (crosses_threshold(frame, total, threshold)) {
            out.emitted = truncate_at_crossing(top.tokens, total, threshold);
            out.stop_reason = StopReason::ThresholdCrossed;
            return out;
        }
    }
    out.emitted = truncate_at_crossing(beams.front().tokens, total, threshold);
    out.stop_reason = StopReason::TokenBudget;
    return out;
}

PolicyOutcome alignatt_decode(IncrementalDecoder& decoder, const AudioWindow& window,
                              const std::vector<std::string>& prompt,
                              const std::vector<std::string>& context,
                              const std::vector<std::string>& forced_prefix,
                              const AlignAttConfig& cfg, bool is_final) {
    if (cfg.beams == 1)
        return alignatt_decode_greedy(decoder, window, prompt, context, forced_prefix, cfg,
                                      is_final);
    return alignatt_decode_beam(decoder, window, prompt, context, forced_prefix, cfg, is_final);
}

}  // namespace streamsim
