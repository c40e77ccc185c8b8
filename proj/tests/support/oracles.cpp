#include "support/oracles.hpp"

#include <algorithm>
#include <cstdlib>
#include <span>

#include "streamsim/text.hpp"

namespace testsup {

namespace {

constexpr int kNone = -1, kMatch = 0, kDelete = 1, kInsert = 2;

struct BruteSearch {
    const std::u32string& gold;
    const std::u32string& hyp;
    PathCost best;
    bool found = false;

    void walk(size_t i, size_t j, int cls, int edits, int transitions) {
        // any completion needs at least the length difference in edits and
        // never removes a transition, so bound against the best so far
        const int remaining =
            (int)std::labs((long)(gold.size() - i) - (long)(hyp.size() - j));
        if (found) {
            if (edits + remaining > best.edits) return;
            if (edits + remaining == best.edits && transitions >= best.transitions) return;
        }
        if (i == gold.size() && j == hyp.size()) {
            best = {edits, transitions};
            found = true;
            return;
        }
        if (i < gold.size() && j < hyp.size())
            walk(i + 1, j + 1, kMatch, edits + (gold[i] == hyp[j] ? 0 : 1),
                 transitions + (cls != kNone && cls != kMatch));
        if (i < gold.size())
            walk(i + 1, j, kDelete, edits + 1, transitions + (cls != kNone && cls != kDelete));
        if (j < hyp.size())
            walk(i, j + 1, kInsert, edits + 1, transitions + (cls != kNone && cls != kInsert));
    }
};

}  // namespace

PathCost brute_force_align(const std::u32string& gold, const std::u32string& hyp) {
    BruteSearch search{gold, hyp, {}, false};
    search.walk(0, 0, kNone, 0, 0);
    return search.best;
}

PathCost brute_force_align_utf8(std::string_view gold, std::string_view hyp) {
    const auto g = streamsim::utf8_decode(gold);
    const auto h = streamsim::utf8_decode(hyp);
    return brute_force_align(std::u32string(g.begin(), g.end()),
                             std::u32string(h.begin(), h.end()));
}

long plain_edit_distance(const std::u32string& a, const std::u32string& b) {
    std::vector<long> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = (long)j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = (long)i;
        for (size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1,
                               cur[j - 1] + 1});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

long plain_edit_distance_words(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
    std::vector<long> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = (long)j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = (long)i;
        for (size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1,
                               cur[j - 1] + 1});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// ---------- TableDecoder ----------

namespace {

streamsim::AttentionSnapshot one_hot(int frames, int peak) {
    streamsim::AttentionSnapshot snap;
    snap.weights.assign((size_t)frames, 0.0);
    snap.weights[(size_t)std::clamp(peak, 0, frames - 1)] = 1.0;
    return snap;
}

class TableSession : public streamsim::DecoderSession {
public:
    TableSession(const std::map<std::string, std::vector<TableCandidate>>* table, int frames,
                 std::string path)
        : table_(table), frames_(frames), path_(std::move(path)) {}

    std::vector<streamsim::DecodedToken> step() override {
        const auto it = table_->find(path_);
        if (it == table_->end()) {
            streamsim::DecodedToken end;
            end.is_end = true;
            end.attention = one_hot(frames_, frames_ - 1);
            return {end};
        }
        std::vector<streamsim::DecodedToken> out;
        for (const TableCandidate& c : it->second) {
            streamsim::DecodedToken tok;
            tok.text = c.text;
            tok.score = c.score;
            tok.is_end = c.is_end;
            tok.attention = one_hot(frames_, c.frame);
            out.push_back(std::move(tok));
        }
        return out;
    }

    void advance(const streamsim::DecodedToken& chosen) override {
        if (!path_.empty()) path_ += '/';
        path_ += chosen.text;
    }

    std::unique_ptr<streamsim::DecoderSession> fork() const override {
        return std::make_unique<TableSession>(table_, frames_, path_);
    }

private:
    const std::map<std::string, std::vector<TableCandidate>>* table_;
    int frames_;
    std::string path_;
};

}  // namespace

std::unique_ptr<streamsim::DecoderSession> TableDecoder::begin_buffer(
    const streamsim::AudioWindow& window, const std::vector<std::string>&,
    const std::vector<std::string>&, const std::vector<std::string>& forced_prefix) {
    std::string path;
    for (const std::string& t : forced_prefix) {
        if (!path.empty()) path += '/';
        path += t;
    }
    return std::make_unique<TableSession>(&table_, window.frames(), path);
}

// ---------- RandomDecoder ----------

namespace {

class RandomSession : public streamsim::DecoderSession {
public:
    RandomSession(std::mt19937 rng, int frames, int committed)
        : rng_(std::move(rng)), frames_(frames), committed_(committed) {}

    std::vector<streamsim::DecodedToken> step() override {
        static const char* vocab[] = {"aa", "bb", "cc", "dd", "ee", "ff", "gg", "hh"};
        if (committed_ >= 40) {
            streamsim::DecodedToken end;
            end.is_end = true;
            end.attention = soft_peak(frames_ - 1);
            return {end};
        }
        std::uniform_int_distribution<int> n_cands(2, 4);
        std::uniform_int_distribution<int> word(0, 7);
        std::uniform_int_distribution<int> jitter(0, 4);
        std::uniform_int_distribution<int> endroll(0, 19);
        std::uniform_real_distribution<double> score(-4.0, 0.0);

        const int n = n_cands(rng_);
        std::vector<streamsim::DecodedToken> out;
        for (int k = 0; k < n; ++k) {
            streamsim::DecodedToken tok;
            tok.is_end = committed_ > 0 && endroll(rng_) == 0;
            if (!tok.is_end) tok.text = vocab[word(rng_)];
            tok.score = score(rng_);
            tok.attention = soft_peak(committed_ * 2 + jitter(rng_));
            out.push_back(std::move(tok));
        }
        return out;
    }

    void advance(const streamsim::DecodedToken&) override { ++committed_; }

    std::unique_ptr<streamsim::DecoderSession> fork() const override {
        return std::make_unique<RandomSession>(rng_, frames_, committed_);
    }

private:
    streamsim::AttentionSnapshot soft_peak(int peak) {
        streamsim::AttentionSnapshot snap;
        snap.weights.assign((size_t)frames_, 0.3 / frames_);
        snap.weights[(size_t)std::clamp(peak, 0, frames_ - 1)] += 0.7;
        return snap;
    }

    std::mt19937 rng_;
    int frames_;
    int committed_;
};

}  // namespace

std::unique_ptr<streamsim::DecoderSession> RandomDecoder::begin_buffer(
    const streamsim::AudioWindow& window, const std::vector<std::string>&,
    const std::vector<std::string>&, const std::vector<std::string>& forced_prefix) {
    // the stream restarts deterministically for a given window and prefix
    std::seed_seq seq{(unsigned)seed_, (unsigned)window.first_frame,
                      (unsigned)window.frames(), (unsigned)forced_prefix.size()};
    return std::make_unique<RandomSession>(std::mt19937(seq), window.frames(),
                                           (int)forced_prefix.size());
}

// ---------- text decoders ----------

std::string GrowingTextDecoder::hypothesize(const std::vector<streamsim::ChatMessage>&) {
    ++calls_;
    const size_t n = std::min(calls_, target_.size());
    return streamsim::join_words(std::span(target_.data(), n));
}

std::string SequenceTextDecoder::hypothesize(const std::vector<streamsim::ChatMessage>&) {
    const size_t i = std::min(calls_, hyps_.empty() ? 0 : hyps_.size() - 1);
    ++calls_;
    return hyps_.empty() ? "" : hyps_[i];
}

std::string RandomTextDecoder::hypothesize(const std::vector<streamsim::ChatMessage>&) {
    static const char* vocab[] = {"alpha", "beta", "gamma", "delta", "omega"};
    std::uniform_int_distribution<int> len(0, 14);
    std::uniform_int_distribution<int> word(0, 4);
    const int n = len(rng_);
    std::string out;
    for (int k = 0; k < n; ++k) {
        if (!out.empty()) out += ' ';
        out += vocab[word(rng_)];
    }
    return out;
}

}  // namespace testsup
