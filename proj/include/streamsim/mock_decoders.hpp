#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "streamsim/core.hpp"
#include "streamsim/translate.hpp"

namespace streamsim {

// ---------- speech side ----------

// One scripted target token attending one global encoder frame.
struct OracleEntry {
    int payload_id = -1;  // granule payload this token belongs to, -1 for none
    std::string token;
    long frame = 0;  // global frame index, non-decreasing across the script
};

// Parsed oracle script: token entries plus payloads the script vouches for
// without producing tokens (silence the VAD may still let through).
struct OracleScript {
    std::vector<OracleEntry> entries;
    std::set<int> silent_payloads;
};

OracleScript load_oracle_script(const std::string& path);

// Deterministic stand-in for an attention-guided speech decoder: token k
// attends exactly its scripted frame. Frames outside the current window clamp
// to the window edge, so a token whose audio has not arrived yet looks
// maximally uncertain and a token whose audio was trimmed looks settled.
// Tokens for trimmed audio that were never emitted are skipped, as their
// evidence is gone.
class DiagonalOracleDecoder : public IncrementalDecoder {
public:
    explicit DiagonalOracleDecoder(std::vector<OracleEntry> script, int extra_candidates = 2);
    explicit DiagonalOracleDecoder(const OracleScript& script, int extra_candidates = 2);
    static DiagonalOracleDecoder from_file(const std::string& path);

    std::unique_ptr<DecoderSession> begin_buffer(
        const AudioWindow& window, const std::vector<std::string>& prompt,
        const std::vector<std::string>& context,
        const std::vector<std::string>& forced_prefix) override;

    const std::set<int>& payload_ids() const { return payload_ids_; }
    // error naming the first payload the script knows nothing about
    void require_payloads(const std::set<int>& needed) const;

private:
    std::vector<OracleEntry> script_;
    std::set<int> payload_ids_;
    int extra_candidates_;
};

// ---------- text side ----------

// TSV columns: source_prefix, hypothesis; duplicate prefixes are an error
std::map<std::string, std::string> load_mt_table(const std::string& path);

// Exact-match lookup from the full buffered source to a target hypothesis.
// A missing prefix yields an empty hypothesis, or an error naming the key
// when strict.
class ScriptedTextDecoder : public TextDecoder {
public:
    explicit ScriptedTextDecoder(std::map<std::string, std::string> table, bool strict = false);
    static ScriptedTextDecoder from_file(const std::string& path, bool strict = false);

    std::string hypothesize(const std::vector<ChatMessage>& chat) override;

private:
    std::map<std::string, std::string> table_;
    bool strict_;
};

}  // namespace streamsim
