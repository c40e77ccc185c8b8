#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamsim/alignatt.hpp"
#include "streamsim/core.hpp"

namespace streamsim {

// ---------- voice activity gating ----------

// Fixed-size labelled slice of the input stream. Simulations carry a payload
// id per granule instead of samples; payload ids key into a scripted decoder.
struct Granule {
    double start_s = 0.0;
    double end_s = 0.0;
    bool voice = false;
    int payload_id = -1;
};

struct VadConfig {
    double granule_s = 0.04;
    double min_silence_s = 0.5;  // non-voice run that ends a voice region
    double voice_pad_s = 0.1;    // margin kept on both sides of a region
};

// Maximal voice region after gating. Non-voice runs shorter than min_silence
// are bridged (kept inside the region) so the region's audio stays contiguous
// in time; the pad extends the region into the surrounding silence, clamped
// to the stream bounds and to the previous region.
struct VoiceSpan {
    double start_s = 0.0;
    double end_s = 0.0;
    std::vector<Granule> granules;  // every granule overlapping [start, end]
};

struct VadEvent {
    enum class Kind { Voice, EndOfVoice };
    Kind kind = Kind::Voice;
    VoiceSpan span;  // meaningful for Voice events
};

std::vector<VadEvent> vad_gate(std::span<const Granule> granules, const VadConfig& cfg);

// ---------- chunk accumulation ----------

// Either a chunk to process or a bare finalize marker (voice ended exactly on
// a chunk boundary, nothing left to flush).
struct ChunkEvent {
    std::optional<AudioChunk> chunk;
    bool is_final = false;
};

// Cut voice spans into chunks at granule boundaries: a chunk closes at the
// first boundary where accumulated audio >= min_chunk_size_s, and whatever
// remains when the voice ends is flushed as a final chunk.
std::vector<ChunkEvent> accumulate(std::span<const VadEvent> events, double min_chunk_size_s,
                                   double frame_rate);

// ---------- streaming buffers ----------

struct PipelineConfig {
    double min_chunk_size_s = 1.0;
    double buffer_length_s = 30.0;  // audio budget before the front chunk is dropped
    int max_context_length = 0;     // word budget shared by prompt and context
    bool static_prompt = true;      // immutable prompt vs prompt pushed away first
    std::string prompt_text;
    double frame_rate = 50.0;  // encoder frames per second of audio
    AlignAttConfig alignatt;
    VadConfig vad;
};

struct BufferedChunk {
    AudioChunk chunk;
    long seq = 0;  // stable identity, survives trimming
};

struct AttributedToken {
    DecodedToken token;
    long chunk_seq = 0;  // chunk holding the token's most-attended frame
};

struct BufferSet {
    std::vector<BufferedChunk> audio;
    std::vector<AttributedToken> forced_prefix;  // chunk_seq non-decreasing
    std::vector<std::string> context;            // words pushed out of the audio buffer
    std::vector<std::string> prompt;
    double audio_duration_s() const;
};

// Drop leading chunks while the audio buffer is at or over budget, moving
// their attributed tokens into context as words, then shrink prompt+context
// to max_context_length words. A static prompt is never touched; otherwise
// the prompt is pushed away before any context word.
void trim_buffers(BufferSet& buffers, const PipelineConfig& cfg);

// The four-buffer streaming loop around an incremental decoder. Updates are
// transactional: a decoder failure leaves the state untouched.
class S2tPipeline {
public:
    S2tPipeline(PipelineConfig cfg, IncrementalDecoder& decoder);

    // append one chunk, decode under the emission policy, trim; is_final
    // decodes with the final threshold and then clears the buffers
    std::vector<EmissionEvent> process_chunk(const AudioChunk& chunk, bool is_final);

    // final decode over whatever audio is buffered, then clear
    std::vector<EmissionEvent> finalize();

    const BufferSet& state() const { return buffers_; }
    const PipelineConfig& config() const { return cfg_; }

private:
    AudioWindow window_of(const BufferSet& buffers) const;
    std::vector<EmissionEvent> decode_into(BufferSet& buffers, double consumed_until_s,
                                           bool is_final);
    void clear_buffers(BufferSet& buffers);

    PipelineConfig cfg_;
    IncrementalDecoder& decoder_;
    BufferSet buffers_;
    long next_seq_ = 0;
};

}  // namespace streamsim
