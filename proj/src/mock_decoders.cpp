#include "streamsim/mock_decoders.hpp"

#include <algorithm>
#include <utility>

#include "streamsim/io.hpp"

namespace streamsim {

namespace {

class OracleSession : public DecoderSession {
public:
    OracleSession(const std::vector<OracleEntry>* script, AudioWindow window,
                  size_t next_index, int extra_candidates)
        : script_(script),
          window_(std::move(window)),
          next_index_(next_index),
          extra_(extra_candidates) {}

    std::vector<DecodedToken> step() override {
        if (next_index_ >= script_->size()) {
            DecodedToken end;
            end.is_end = true;
            end.attention.weights.assign((size_t)window_.frames(), 0.0);
            end.attention.weights.back() = 1.0;
            return {end};
        }
        const OracleEntry& e = (*script_)[next_index_];
        long local = e.frame - window_.first_frame;
        local = std::clamp(local, 0L, (long)window_.frames() - 1);

        DecodedToken primary;
        primary.text = e.token;
        primary.score = 0.0;
        primary.attention.weights.assign((size_t)window_.frames(), 0.0);
        primary.attention.weights[(size_t)local] = 1.0;

        std::vector<DecodedToken> cands{primary};
        // weak fillers so beam searches have something to rank against
        for (int k = 1; k <= extra_; ++k) {
            DecodedToken filler = primary;
            filler.text = e.token + "~" + std::to_string(k);
            filler.score = -5.0 * k;
            cands.push_back(std::move(filler));
        }
        return cands;
    }

    void advance(const DecodedToken&) override { ++next_index_; }

    std::unique_ptr<DecoderSession> fork() const override {
        return std::make_unique<OracleSession>(script_, window_, next_index_, extra_);
    }

private:
    const std::vector<OracleEntry>* script_;
    AudioWindow window_;
    size_t next_index_;
    int extra_;
};

}  // namespace

DiagonalOracleDecoder::DiagonalOracleDecoder(std::vector<OracleEntry> script,
                                             int extra_candidates)
    : script_(std::move(script)), extra_candidates_(extra_candidates) {
    for (size_t i = 0; i < script_.size(); ++i) {
        if (i > 0 && script_[i].frame < script_[i - 1].frame)
            throw Error("oracle script: attended frames must be non-decreasing");
        if (script_[i].payload_id >= 0) payload_ids_.insert(script_[i].payload_id);
    }
}

DiagonalOracleDecoder::DiagonalOracleDecoder(const OracleScript& script, int extra_candidates)
    : DiagonalOracleDecoder(script.entries, extra_candidates) {
    payload_ids_.insert(script.silent_payloads.begin(), script.silent_payloads.end());
}

OracleScript load_oracle_script(const std::string& path) {
    const auto lines = read_lines(path);
    OracleScript script;
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        bool blank = true;
        for (char c : line)
            if (!std::isspace((unsigned char)c)) {
                blank = false;
                break;
            }
        if (blank || line[line.find_first_not_of(" \t")] == '#') continue;
        const auto f = split_tsv(line);
        const std::string where = path + ":" + std::to_string(i + 1);
        if (f.size() == 1) {
            // payload the script knows about but that produces no tokens
            script.silent_payloads.insert((int)parse_integer(f[0], where));
            continue;
        }
        if (f.size() != 3) throw Error(where + ": expected payload_id, token, frame");
        OracleEntry e;
        e.payload_id = (int)parse_integer(f[0], where);
        e.token = f[1];
        if (e.token.empty()) throw Error(where + ": empty token");
        e.frame = parse_integer(f[2], where);
        script.entries.push_back(std::move(e));
    }
    return script;
}

DiagonalOracleDecoder DiagonalOracleDecoder::from_file(const std::string& path) {
    return DiagonalOracleDecoder(load_oracle_script(path));
}

std::unique_ptr<DecoderSession> DiagonalOracleDecoder::begin_buffer(
    const AudioWindow& window, const std::vector<std::string>&,
    const std::vector<std::string>&, const std::vector<std::string>& forced_prefix) {
    if (window.frames() < 1) throw Error("oracle decoder: empty audio window");
    // entries attending audio before this window were either emitted (and
    // trimmed into context) or lost with their audio; the prefix covers
    // everything emitted against the window itself
    size_t base = 0;
    while (base < script_.size() && script_[base].frame < window.first_frame) ++base;
    return std::make_unique<OracleSession>(&script_, window,
                                           base + forced_prefix.size(),
                                           extra_candidates_);
}

void DiagonalOracleDecoder::require_payloads(const std::set<int>& needed) const {
    for (int id : needed)
        if (!payload_ids_.count(id))
            throw Error("decoder script has no entry for payload id " + std::to_string(id));
}

ScriptedTextDecoder::ScriptedTextDecoder(std::map<std::string, std::string> table, bool strict)
    : table_(std::move(table)), strict_(strict) {}

std::map<std::string, std::string> load_mt_table(const std::string& path) {
    const auto lines = read_lines(path);
    std::map<std::string, std::string> table;
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_tsv(line);
        const std::string where = path + ":" + std::to_string(i + 1);
        if (f.size() != 2) throw Error(where + ": expected source_prefix, hypothesis");
        if (table.count(f[0])) throw Error(where + ": duplicate source prefix '" + f[0] + "'");
        table[f[0]] = f[1];
    }
    return table;
}

ScriptedTextDecoder ScriptedTextDecoder::from_file(const std::string& path, bool strict) {
    return ScriptedTextDecoder(load_mt_table(path), strict);
}

std::string ScriptedTextDecoder::hypothesize(const std::vector<ChatMessage>& chat) {
    const ChatMessage* source = nullptr;
    for (const ChatMessage& m : chat)
        if (m.role == ChatMessage::Role::User) source = &m;
    if (!source) throw Error("text decoder: chat has no user message");
    const auto it = table_.find(source->text);
    if (it == table_.end()) {
        if (strict_)
            throw Error("decoder script has no entry for source prefix '" + source->text +
                        "'");
        return "";
    }
    return it->second;
}

}  // namespace streamsim
