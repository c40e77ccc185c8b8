#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace streamsim {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------- time ----------
//
// All times are seconds inside the library; milliseconds appear only at file
// and CLI boundaries. Emission timestamps follow the computationally unaware
// convention: an output is stamped with the end of the source consumed to
// produce it, never with wall clock.

double unaware_clock_stamp(double consumed_source_end_s);

struct TimedWord {
    std::string text;    // non-empty, no internal whitespace
    double time_s = 0.0; // for gold transcripts: word start time
};

struct Transcript {
    std::vector<TimedWord> words;  // times non-decreasing
};

struct EmissionEvent {
    std::string unit;  // word or token made visible to the user
    double emission_time_s = 0.0;
    double source_consumed_until_s = 0.0;
};

// Append-only event record. Rejects emission times that move backwards;
// ties are fine (several units can surface at the same simulated moment).
class EventLog {
public:
    void append(std::string unit, double emission_time_s, double source_consumed_until_s);
    void append(const EmissionEvent& ev);
    const std::vector<EmissionEvent>& events() const { return events_; }
    size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

private:
    std::vector<EmissionEvent> events_;
};

// ---------- audio ----------

struct AudioChunk {
    double start_s = 0.0;
    double end_s = 0.0;   // > start_s
    long first_frame = 0; // global encoder frame index, round(start_s * frame_rate)
    int frames = 0;       // round(end_s * frame_rate) - first_frame, >= 1
    // simulation payload id per frame, -1 where no granule provides one
    std::vector<int> payload_per_frame;
};

// Contiguous run of encoder frames handed to a decoder: the concatenation of
// the buffered audio chunks.
struct AudioWindow {
    long first_frame = 0;
    std::vector<int> payload_per_frame;
    int frames() const { return (int)payload_per_frame.size(); }
};

// ---------- decoding ----------

struct AttentionSnapshot {
    std::vector<double> weights;  // one per frame of the window, sums to ~1
};

// throws Error unless weights are non-negative and sum to 1 +- 1e-6
void validate_attention(const AttentionSnapshot& snapshot);

struct DecodedToken {
    std::string text;
    double score = 0.0;  // log-probability scale, higher is better
    AttentionSnapshot attention;
    bool is_end = false;  // end-of-sequence marker, carries no text
};

// One decoding path over a fixed audio window. step() proposes candidate
// continuations; advance() commits one of them; fork() copies the path so a
// beam search can branch. Implementations must be deterministic functions of
// (window, prompt, context, prefix, committed path, seed).
class DecoderSession {
public:
    virtual ~DecoderSession() = default;
    virtual std::vector<DecodedToken> step() = 0;
    virtual void advance(const DecodedToken& chosen) = 0;
    virtual std::unique_ptr<DecoderSession> fork() const = 0;
};

class IncrementalDecoder {
public:
    virtual ~IncrementalDecoder() = default;
    virtual std::unique_ptr<DecoderSession> begin_buffer(
        const AudioWindow& window,
        const std::vector<std::string>& prompt,
        const std::vector<std::string>& context,
        const std::vector<std::string>& forced_prefix) = 0;
};

}  // namespace streamsim
