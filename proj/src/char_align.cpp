#include "streamsim/char_align.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <string>

#include "streamsim/core.hpp"
#include "streamsim/text.hpp"

namespace streamsim {

namespace {

// Layer order doubles as the tie-break preference: match, then Delete, then
// Insert.
constexpr int kMatch = 0;
constexpr int kDelete = 1;
constexpr int kInsert = 2;

constexpr uint64_t kInf = std::numeric_limits<uint64_t>::max() / 4;

// Costs are packed as edits * weight + transitions. Any weight larger than
// the maximum possible transition count makes the order lexicographic.
inline uint64_t edit_weight(size_t m, size_t n) { return (uint64_t)(m + n + 2); }

struct Cell {
    std::array<uint64_t, 3> v;
};

// Cheapest way to enter `into` from any layer of the predecessor cell. Layers
// are scanned in preference order with strict less-than, so cost ties resolve
// toward match > Delete > Insert.
inline void best_from(const Cell& base, int into, uint64_t& val, uint8_t& pred) {
    val = kInf;
    pred = 3;
    for (int c = 0; c < 3; ++c) {
        if (base.v[c] >= kInf) continue;
        const uint64_t v = base.v[c] + (c == into ? 0 : 1);
        if (v < val) {
            val = v;
            pred = (uint8_t)c;
        }
    }
}

inline void set_pred(uint8_t& byte, int layer, uint8_t pred) {
    byte = (uint8_t)((byte & ~(0x3u << (2 * layer))) | (pred << (2 * layer)));
}

inline uint8_t get_pred(uint8_t byte, int layer) { return (byte >> (2 * layer)) & 0x3u; }

inline int op_class(EditKind k) {
    switch (k) {
        case EditKind::Copy:
        case EditKind::Substitute: return kMatch;
        case EditKind::Delete: return kDelete;
        default: return kInsert;
    }
}

void check_caps(size_t m, size_t n, const CharAlignOptions& opts) {
    if (m > opts.max_chars || n > opts.max_chars)
        throw Error("char_align: input of " + std::to_string(std::max(m, n)) +
                    " characters exceeds the cap of " + std::to_string(opts.max_chars) +
                    "; pre-segment the transcript and align the pieces");
}

CharAlignment backtrace(const std::vector<char32_t>& g, const std::vector<char32_t>& h,
                        const std::vector<uint8_t>& bt, const Cell& last) {
    const size_t m = g.size(), n = h.size();
    CharAlignment out;
    if (m == 0 && n == 0) return out;

    int cls = kMatch;
    uint64_t best = kInf;
    for (int c = 0; c < 3; ++c) {
        if (last.v[c] < best) {
            best = last.v[c];
            cls = c;
        }
    }

    size_t i = m, j = n;
    out.ops.reserve(m + n);
    while (i > 0 || j > 0) {
        const uint8_t byte = bt[i * (n + 1) + j];
        EditOp op{};
        if (cls == kMatch) {
            op.kind = (g[i - 1] == h[j - 1]) ? EditKind::Copy : EditKind::Substitute;
            op.gold_index = (int)i - 1;
            op.hyp_index = (int)j - 1;
            cls = get_pred(byte, kMatch);
            --i;
            --j;
        } else if (cls == kDelete) {
            op.kind = EditKind::Delete;
            op.gold_index = (int)i - 1;
            op.hyp_index = -1;
            cls = get_pred(byte, kDelete);
            --i;
        } else {
            op.kind = EditKind::Insert;
            op.gold_index = -1;
            op.hyp_index = (int)j - 1;
            cls = get_pred(byte, kInsert);
            --j;
        }
        out.ops.push_back(op);
    }
    std::reverse(out.ops.begin(), out.ops.end());

    for (size_t k = 0; k < out.ops.size(); ++k) {
        if (out.ops[k].kind != EditKind::Copy) ++out.edits;
        if (k > 0 && op_class(out.ops[k].kind) != op_class(out.ops[k - 1].kind)) ++out.transitions;
    }
    return out;
}

// Fill one cell. `diag`, `up` and `left` are the predecessor cells
// (i-1,j-1), (i-1,j) and (i,j-1); null when out of range.
inline void fill_cell(const char32_t* g, const char32_t* h, size_t i, size_t j, uint64_t w,
                      const Cell* diag, const Cell* up, const Cell* left, Cell& out,
                      uint8_t& bt_byte) {
    out.v = {kInf, kInf, kInf};
    bt_byte = 0xFF;
    if (diag) {
        uint64_t val;
        uint8_t pred;
        best_from(*diag, kMatch, val, pred);
        if (val < kInf) {
            out.v[kMatch] = val + (g[i - 1] == h[j - 1] ? 0 : w);
            set_pred(bt_byte, kMatch, pred);
        }
    }
    if (up) {
        uint64_t val;
        uint8_t pred;
        best_from(*up, kDelete, val, pred);
        if (val < kInf) {
            out.v[kDelete] = val + w;
            set_pred(bt_byte, kDelete, pred);
        }
    }
    if (left) {
        uint64_t val;
        uint8_t pred;
        best_from(*left, kInsert, val, pred);
        if (val < kInf) {
            out.v[kInsert] = val + w;
            set_pred(bt_byte, kInsert, pred);
        }
    }
}

CharAlignment align_serial(const std::vector<char32_t>& g, const std::vector<char32_t>& h) {
    const size_t m = g.size(), n = h.size();
    const uint64_t w = edit_weight(m, n);
    std::vector<uint8_t> bt((m + 1) * (n + 1), 0xFF);
    std::vector<Cell> prev(n + 1), cur(n + 1);

    cur[0].v = {0, 0, 0};  // virtual start: first op pays no transition
    for (size_t j = 1; j <= n; ++j)
        fill_cell(g.data(), h.data(), 0, j, w, nullptr, nullptr, &cur[j - 1], cur[j], bt[j]);

    for (size_t i = 1; i <= m; ++i) {
        std::swap(prev, cur);
        fill_cell(g.data(), h.data(), i, 0, w, nullptr, &prev[0], nullptr, cur[0],
                  bt[i * (n + 1)]);
        for (size_t j = 1; j <= n; ++j)
            fill_cell(g.data(), h.data(), i, j, w, &prev[j - 1], &prev[j], &cur[j - 1], cur[j],
                      bt[i * (n + 1) + j]);
    }
    return backtrace(g, h, bt, cur[n]);
}

CharAlignment align_wavefront(const std::vector<char32_t>& g, const std::vector<char32_t>& h) {
    const size_t m = g.size(), n = h.size();
    const uint64_t w = edit_weight(m, n);
    std::vector<uint8_t> bt((m + 1) * (n + 1), 0xFF);

    // Three rolling anti-diagonals indexed by row. Cell (i, j) on diagonal
    // d = i + j depends on d-1 (up, left) and d-2 (diag) only, so every cell
    // of one diagonal can be filled in parallel.
    std::vector<Cell> d2(m + 1), d1(m + 1), d0(m + 1);

    for (size_t d = 0; d <= m + n; ++d) {
        const long lo = (long)(d > n ? d - n : 0);
        const long hi = (long)std::min(d, m);
#pragma omp parallel for schedule(static)
        for (long i = lo; i <= hi; ++i) {
            const size_t j = d - (size_t)i;
            if (i == 0 && j == 0) {
                d0[0].v = {0, 0, 0};
                bt[0] = 0xFF;
                continue;
            }
            const Cell* diag = (i >= 1 && j >= 1) ? &d2[i - 1] : nullptr;
            const Cell* up = (i >= 1) ? &d1[i - 1] : nullptr;
            const Cell* left = (j >= 1) ? &d1[i] : nullptr;
            fill_cell(g.data(), h.data(), (size_t)i, j, w, diag, up, left, d0[i],
                      bt[(size_t)i * (n + 1) + j]);
        }
        std::swap(d2, d1);
        std::swap(d1, d0);
    }
    // after the final rotation the last diagonal lives in d1
    return backtrace(g, h, bt, d1[m]);
}

}  // namespace

CharAlignment char_align_serial(std::string_view gold, std::string_view hyp,
                                const CharAlignOptions& opts) {
    const auto g = utf8_decode(gold);
    const auto h = utf8_decode(hyp);
    check_caps(g.size(), h.size(), opts);
    return align_serial(g, h);
}

CharAlignment char_align_wavefront(std::string_view gold, std::string_view hyp,
                                   const CharAlignOptions& opts) {
    const auto g = utf8_decode(gold);
    const auto h = utf8_decode(hyp);
    check_caps(g.size(), h.size(), opts);
    return align_wavefront(g, h);
}

CharAlignment char_align(std::string_view gold, std::string_view hyp,
                         const CharAlignOptions& opts) {
    const auto g = utf8_decode(gold);
    const auto h = utf8_decode(hyp);
    check_caps(g.size(), h.size(), opts);
    // the wavefront pays one barrier per diagonal; below ~64k cells the
    // serial sweep wins and the results are identical anyway
    if ((g.size() + 1) * (h.size() + 1) < (size_t)1 << 16) return align_serial(g, h);
    return align_wavefront(g, h);
}

}  // namespace streamsim
