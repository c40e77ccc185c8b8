#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace streamsim {

// Character-level alignment between a gold text and a hypothesis text with a
// lexicographic objective: minimize edit count first, then the number of
// class transitions along the op sequence. Copy and Substitute share the
// match class; Delete and Insert are their own classes. Keeping runs of one
// class together is what lets hypothesis words map onto gold words cleanly
// even when whole words were dropped or inserted.

enum class EditKind : uint8_t { Copy, Substitute, Delete, Insert };

struct EditOp {
    EditKind kind;
    int gold_index;  // code-point index into gold, -1 for Insert
    int hyp_index;   // code-point index into hyp, -1 for Delete
};

struct CharAlignment {
    std::vector<EditOp> ops;  // monotone over both texts
    int edits = 0;            // ops that are not Copy
    int transitions = 0;      // adjacent ops of different class
};

struct CharAlignOptions {
    // per-text cap; longer inputs are rejected so the O(m*n) table cannot
    // exhaust memory. Pre-segment longer transcripts and align the pieces.
    size_t max_chars = 50000;
};

// Ties are broken deterministically: at the final cell and at every backtrace
// step the match class is preferred over Delete over Insert.
CharAlignment char_align(std::string_view gold, std::string_view hyp,
                         const CharAlignOptions& opts = {});

// Serial row-sweep reference, kept for testing the wavefront kernel against.
CharAlignment char_align_serial(std::string_view gold, std::string_view hyp,
                                const CharAlignOptions& opts = {});

// OpenMP anti-diagonal wavefront kernel. Produces bit-identical output to the
// serial reference.
CharAlignment char_align_wavefront(std::string_view gold, std::string_view hyp,
                                   const CharAlignOptions& opts = {});

}  // namespace streamsim
