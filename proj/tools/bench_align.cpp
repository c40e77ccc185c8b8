// Times the two character-alignment kernels on synthetic transcripts and
// checks that they produce identical costs.

#include <omp.h>

#include <cstdio>
#include <random>
#include <string>

#include "streamsim/char_align.hpp"

using namespace streamsim;

namespace {

std::string synthetic_text(size_t chars, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> letter('a', 'z');
    std::uniform_int_distribution<int> word_len(2, 9);
    std::string text;
    while (text.size() < chars) {
        int n = word_len(rng);
        for (int i = 0; i < n && text.size() < chars; ++i) text += (char)letter(rng);
        if (text.size() < chars) text += ' ';
    }
    return text;
}

std::string corrupt(const std::string& text, double rate, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> letter('a', 'z');
    std::string out;
    for (char c : text) {
        double r = coin(rng);
        if (c != ' ' && r < rate / 3) continue;
        if (c != ' ' && r < 2 * rate / 3) {
            out += (char)letter(rng);
            continue;
        }
        out += c;
        if (r > 1.0 - rate / 3) out += (char)letter(rng);
    }
    return out;
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%10s %10s %12s %12s %9s\n", "gold_chars", "hyp_chars", "serial_s", "wavefront_s",
                "speedup");
    for (size_t n : {500u, 1000u, 2000u, 4000u, 8000u, 16000u}) {
        std::string gold = synthetic_text(n, (unsigned)n);
        std::string hyp = corrupt(gold, 0.15, (unsigned)n + 1);
        CharAlignOptions opts;

        double t0 = omp_get_wtime();
        CharAlignment serial = char_align_serial(gold, hyp, opts);
        double t1 = omp_get_wtime();
        CharAlignment wavefront = char_align_wavefront(gold, hyp, opts);
        double t2 = omp_get_wtime();

        if (serial.edits != wavefront.edits || serial.transitions != wavefront.transitions) {
            std::fprintf(stderr, "kernel mismatch at size %zu: serial %d/%d wavefront %d/%d\n", n,
                         serial.edits, serial.transitions, wavefront.edits,
                         wavefront.transitions);
            return 1;
        }
        std::printf("%10zu %10zu %12.4f %12.4f %9.2f\n", gold.size(), hyp.size(), t1 - t0, t2 - t1,
                    (t1 - t0) / (t2 - t1));
    }
    return 0;
}
