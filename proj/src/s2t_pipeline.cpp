#include "streamsim/s2t_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "streamsim/text.hpp"

namespace streamsim {

namespace {

constexpr double kEps = 1e-9;

void check_vad_config(const VadConfig& cfg) {
    if (!(cfg.granule_s > 0.0)) throw Error("vad: granule size must be positive");
    if (!(cfg.min_silence_s > 0.0)) throw Error("vad: min_silence must be positive");
    if (cfg.voice_pad_s < 0.0) throw Error("vad: voice_pad must be >= 0");
}

}  // namespace

std::vector<VadEvent> vad_gate(std::span<const Granule> granules, const VadConfig& cfg) {
    check_vad_config(cfg);
    std::vector<VadEvent> out;
    if (granules.empty()) return out;

    for (size_t i = 0; i < granules.size(); ++i) {
        const Granule& g = granules[i];
        if (!(g.end_s > g.start_s)) throw Error("vad: granule with non-positive duration");
        if (i > 0 && g.start_s < granules[i - 1].end_s - kEps)
            throw Error("vad: granules out of order at t=" + std::to_string(g.start_s));
    }

    const double stream_start = granules.front().start_s;
    const double stream_end = granules.back().end_s;

    bool open = false;
    double span_start = 0.0, last_voice_end = 0.0, silence_dur = 0.0;
    double prev_region_end = stream_start;
    std::vector<Granule> region;          // granules that belong to the open region
    std::vector<Granule> pending_silence; // unconfirmed silence inside/after it

    auto close_region = [&]() {
        const double span_end = std::min(last_voice_end + cfg.voice_pad_s, stream_end);
        // the end pad reaches into silence that has already been observed
        for (const Granule& s : pending_silence)
            if (s.start_s < span_end - kEps) region.push_back(s);
        VadEvent ev;
        ev.kind = VadEvent::Kind::Voice;
        ev.span = {span_start, span_end, std::move(region)};
        out.push_back(std::move(ev));
        out.push_back({VadEvent::Kind::EndOfVoice, {}});
        prev_region_end = span_end;
        region.clear();
        pending_silence.clear();
        open = false;
    };

    for (size_t i = 0; i < granules.size(); ++i) {
        const Granule& g = granules[i];
        if (g.voice) {
            if (!open) {
                open = true;
                span_start = std::max({g.start_s - cfg.voice_pad_s, stream_start,
                                       prev_region_end});
                // pull already-discarded granules back in where the start pad
                // reaches into them, so every frame keeps a payload source
                size_t j = i;
                while (j > 0 && granules[j - 1].end_s > span_start + kEps) --j;
                region.assign(granules.begin() + j, granules.begin() + i);
            } else {
                // short pause: bridged, the region's audio stays contiguous
                for (Granule& s : pending_silence) region.push_back(s);
            }
            pending_silence.clear();
            silence_dur = 0.0;
            region.push_back(g);
            last_voice_end = g.end_s;
        } else if (open) {
            pending_silence.push_back(g);
            silence_dur += g.end_s - g.start_s;
            if (silence_dur >= cfg.min_silence_s - kEps) close_region();
        }
        // leading or inter-region silence is discarded
    }
    if (open) close_region();
    return out;
}

namespace {

AudioChunk build_chunk(double start_s, double end_s, double frame_rate,
                       std::span<const Granule> granules) {
    AudioChunk chunk;
    chunk.start_s = start_s;
    chunk.end_s = end_s;
    // frames come from rounding the two boundaries, not the duration, so that
    // chunks cut from one span tile the frame stream without gaps or overlaps
    // even when a boundary lands between frames (a pad of 2.5 frames, say)
    chunk.first_frame = std::lround(start_s * frame_rate);
    chunk.frames = (int)(std::lround(end_s * frame_rate) - chunk.first_frame);
    if (chunk.frames < 1)
        throw Error("accumulate: chunk of " + std::to_string(end_s - start_s) +
                    " s is below one frame at this frame rate");
    chunk.payload_per_frame.assign((size_t)chunk.frames, -1);
    size_t gi = 0;
    for (int f = 0; f < chunk.frames; ++f) {
        const double center = ((double)(chunk.first_frame + f) + 0.5) / frame_rate;
        while (gi < granules.size() && granules[gi].end_s <= center + kEps) ++gi;
        if (gi < granules.size() && granules[gi].start_s <= center + kEps)
            chunk.payload_per_frame[(size_t)f] = granules[gi].payload_id;
    }
    return chunk;
}

}  // namespace

std::vector<ChunkEvent> accumulate(std::span<const VadEvent> events, double min_chunk_size_s,
                                   double frame_rate) {
    if (!(min_chunk_size_s > 0.0)) throw Error("accumulate: min_chunk_size must be positive");
    if (!(frame_rate > 0.0)) throw Error("accumulate: frame_rate must be positive");

    std::vector<ChunkEvent> out;
    const VoiceSpan* span = nullptr;
    double cursor = 0.0;

    for (const VadEvent& ev : events) {
        if (ev.kind == VadEvent::Kind::Voice) {
            if (span) throw Error("accumulate: voice span before the previous one was closed");
            span = &ev.span;
            cursor = span->start_s;
            for (const Granule& g : span->granules) {
                const double b = std::min(g.end_s, span->end_s);
                if (b <= cursor + kEps) continue;
                if (b - cursor >= min_chunk_size_s - kEps) {
                    out.push_back({build_chunk(cursor, b, frame_rate, span->granules), false});
                    cursor = b;
                }
            }
        } else {  // EndOfVoice
            if (!span) continue;
            // a residual shorter than one encoder frame owns no frame of its
            // own; finalize over the buffered audio instead of flushing it
            const bool has_frames =
                span->end_s - cursor > kEps &&
                std::lround(span->end_s * frame_rate) > std::lround(cursor * frame_rate);
            if (has_frames)
                out.push_back({build_chunk(cursor, span->end_s, frame_rate, span->granules),
                               true});
            else
                out.push_back({std::nullopt, true});
            span = nullptr;
        }
    }
    if (span) throw Error("accumulate: voice span was never closed");
    return out;
}

// ---------- buffers ----------

double BufferSet::audio_duration_s() const {
    double d = 0.0;
    for (const BufferedChunk& c : audio) d += c.chunk.end_s - c.chunk.start_s;
    return d;
}

void trim_buffers(BufferSet& buffers, const PipelineConfig& cfg) {
    while (!buffers.audio.empty() &&
           buffers.audio_duration_s() >= cfg.buffer_length_s - kEps) {
        const long seq = buffers.audio.front().seq;
        buffers.audio.erase(buffers.audio.begin());

        std::vector<std::string> texts;
        size_t n = 0;
        while (n < buffers.forced_prefix.size() && buffers.forced_prefix[n].chunk_seq <= seq)
            texts.push_back(buffers.forced_prefix[n++].token.text);
        buffers.forced_prefix.erase(buffers.forced_prefix.begin(),
                                    buffers.forced_prefix.begin() + (long)n);
        // tokens become plain words once their audio is gone
        for (const std::string& w : split_words(join_words(texts)))
            buffers.context.push_back(w);
    }

    const size_t budget = (size_t)std::max(cfg.max_context_length, 0);
    if (cfg.static_prompt) {
        while (!buffers.context.empty() &&
               buffers.prompt.size() + buffers.context.size() > budget)
            buffers.context.erase(buffers.context.begin());
    } else {
        while (buffers.prompt.size() + buffers.context.size() > budget) {
            if (!buffers.prompt.empty())
                buffers.prompt.erase(buffers.prompt.begin());
            else if (!buffers.context.empty())
                buffers.context.erase(buffers.context.begin());
            else
                break;
        }
    }
}

// ---------- pipeline ----------

S2tPipeline::S2tPipeline(PipelineConfig cfg, IncrementalDecoder& decoder)
    : cfg_(std::move(cfg)), decoder_(decoder) {
    if (!(cfg_.min_chunk_size_s > 0.0)) throw Error("pipeline: min_chunk_size must be positive");
    if (!(cfg_.buffer_length_s > 0.0)) throw Error("pipeline: buffer_length must be positive");
    if (cfg_.max_context_length < 0) throw Error("pipeline: max_context_length must be >= 0");
    if (!(cfg_.frame_rate > 0.0)) throw Error("pipeline: frame_rate must be positive");
    buffers_.prompt = split_words(cfg_.prompt_text);
}

AudioWindow S2tPipeline::window_of(const BufferSet& buffers) const {
    AudioWindow win;
    if (buffers.audio.empty()) return win;
    win.first_frame = buffers.audio.front().chunk.first_frame;
    for (const BufferedChunk& c : buffers.audio)
        win.payload_per_frame.insert(win.payload_per_frame.end(),
                                     c.chunk.payload_per_frame.begin(),
                                     c.chunk.payload_per_frame.end());
    return win;
}

std::vector<EmissionEvent> S2tPipeline::decode_into(BufferSet& buffers,
                                                    double consumed_until_s, bool is_final) {
    const AudioWindow window = window_of(buffers);
    std::vector<std::string> prefix;
    prefix.reserve(buffers.forced_prefix.size());
    for (const AttributedToken& t : buffers.forced_prefix) prefix.push_back(t.token.text);

    const PolicyOutcome outcome = alignatt_decode(decoder_, window, buffers.prompt,
                                                  buffers.context, prefix, cfg_.alignatt,
                                                  is_final);

    std::vector<EmissionEvent> events;
    long last_attr =
        buffers.forced_prefix.empty() ? -1 : buffers.forced_prefix.back().chunk_seq;
    for (const DecodedToken& tok : outcome.emitted) {
        const long gframe = window.first_frame + most_attended_frame(tok.attention);
        long seq = buffers.audio.back().seq;
        for (const BufferedChunk& c : buffers.audio) {
            if (gframe < c.chunk.first_frame + c.chunk.frames) {
                seq = c.seq;
                break;
            }
        }
        seq = std::max(seq, last_attr);  // attribution stays monotone along the prefix
        last_attr = seq;
        buffers.forced_prefix.push_back({tok, seq});
        events.push_back(
            {tok.text, unaware_clock_stamp(consumed_until_s), consumed_until_s});
    }
    return events;
}

void S2tPipeline::clear_buffers(BufferSet& buffers) {
    buffers.audio.clear();
    buffers.forced_prefix.clear();
    buffers.context.clear();
    buffers.prompt = split_words(cfg_.prompt_text);
}

std::vector<EmissionEvent> S2tPipeline::process_chunk(const AudioChunk& chunk, bool is_final) {
    if (!(chunk.end_s > chunk.start_s)) throw Error("process_chunk: empty chunk");
    if (chunk.frames < 1 || chunk.payload_per_frame.size() != (size_t)chunk.frames)
        throw Error("process_chunk: chunk frame metadata inconsistent");
    // boundary rounding may deviate from the duration by up to half a frame
    // on each side
    if (std::fabs(chunk.frames - (chunk.end_s - chunk.start_s) * cfg_.frame_rate) > 1.0 + kEps)
        throw Error("process_chunk: chunk frame count does not match its duration");
    if (!buffers_.audio.empty()) {
        const AudioChunk& last = buffers_.audio.back().chunk;
        if (chunk.start_s < last.end_s - kEps)
            throw Error("process_chunk: chunk must start at or after the buffered audio");
        if (chunk.first_frame != last.first_frame + last.frames)
            throw Error("process_chunk: chunk is not frame-contiguous with the buffer");
    }

    BufferSet next = buffers_;  // decoder failure must leave the state untouched
    next.audio.push_back({chunk, next_seq_});
    std::vector<EmissionEvent> events = decode_into(next, chunk.end_s, is_final);
    if (is_final)
        clear_buffers(next);
    else
        trim_buffers(next, cfg_);
    buffers_ = std::move(next);
    ++next_seq_;
    return events;
}

std::vector<EmissionEvent> S2tPipeline::finalize() {
    if (buffers_.audio.empty()) {
        clear_buffers(buffers_);
        return {};
    }
    BufferSet next = buffers_;
    std::vector<EmissionEvent> events =
        decode_into(next, next.audio.back().chunk.end_s, true);
    clear_buffers(next);
    buffers_ = std::move(next);
    return events;
}

}  // namespace streamsim
