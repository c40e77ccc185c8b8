#pragma once

#include <string>
#include <vector>

#include "streamsim/core.hpp"

namespace streamsim {

// Attention-threshold emission policy. While decoding over a growing audio
// buffer, a token whose attention concentrates on the newest frames is not
// trustworthy yet: the audio that would confirm it has not arrived. Decoding
// stops at the first token whose most-attended frame falls within
// frames_threshold of the buffer end; that token is discarded and will be
// re-derived on the next update through the forced prefix.

struct AlignAttConfig {
    int frames_threshold = 4;       // non-final updates
    int final_frames_threshold = 4; // last update still avoids the trailing frames
    int beams = 1;                  // 1 = greedy
    int max_tokens_per_update = 200;
};

enum class StopReason { ThresholdCrossed, EndToken, TokenBudget };

struct PolicyOutcome {
    std::vector<DecodedToken> emitted;
    StopReason stop_reason = StopReason::ThresholdCrossed;
};

// argmax of the snapshot, lowest index on exact ties; throws on empty
int most_attended_frame(const AttentionSnapshot& snapshot);

// true when the frame lies within `threshold` frames of the buffer end;
// frame must satisfy 0 <= frame < total_frames
bool crosses_threshold(int frame, int total_frames, int threshold);

// One policy-gated decoding pass over the current window. On final updates
// final_frames_threshold applies instead of frames_threshold.
PolicyOutcome alignatt_decode(IncrementalDecoder& decoder, const AudioWindow& window,
                              const std::vector<std::string>& prompt,
                              const std::vector<std::string>& context,
                              const std::vector<std::string>& forced_prefix,
                              const AlignAttConfig& cfg, bool is_final);

// The two variants behind alignatt_decode, exposed so they can be compared
// directly: with beams = 1 they must emit token-identical output.
PolicyOutcome alignatt_decode_greedy(IncrementalDecoder& decoder, const AudioWindow& window,
                                     const std::vector<std::string>& prompt,
                                     const std::vector<std::string>& context,
                                     const std::vector<std::string>& forced_prefix,
                                     const AlignAttConfig& cfg, bool is_final);

PolicyOutcome alignatt_decode_beam(IncrementalDecoder& decoder, const AudioWindow& window,
                                   const std::vector<std::string>& prompt,
                                   const std::vector<std::string>& context,
                                   const std::vector<std::string>& forced_prefix,
                                   const AlignAttConfig& cfg, bool is_final);

}  // namespace streamsim
