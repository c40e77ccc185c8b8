#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "streamsim/mock_decoders.hpp"
#include "streamsim/s2t_pipeline.hpp"

using namespace streamsim;

namespace {

// granules on a fixed grid; payload defaults to the granule index while voiced
std::vector<Granule> grid(double start, double end, double step,
                          std::vector<std::pair<double, double>> voiced) {
    std::vector<Granule> out;
    int idx = 0;
    for (double t = start; t < end - 1e-9; t += step, ++idx) {
        Granule g;
        g.start_s = t;
        g.end_s = t + step;
        for (auto [vs, ve] : voiced)
            if (t >= vs - 1e-9 && t + step <= ve + 1e-9) g.voice = true;
        g.payload_id = g.voice ? idx : -1;
        out.push_back(g);
    }
    return out;
}

AudioChunk chunk_at(double start, double end, double rate) {
    AudioChunk c;
    c.start_s = start;
    c.end_s = end;
    c.first_frame = std::lround(start * rate);
    c.frames = (int)std::lround((end - start) * rate);
    c.payload_per_frame.assign((size_t)c.frames, -1);
    return c;
}

}  // namespace

TEST_SUITE("vad") {
    TEST_CASE("padding reaches into surrounding silence") {
        const auto gs = grid(0.0, 2.0, 0.04, {{0.2, 1.0}});
        const auto events = vad_gate(gs, {});
        REQUIRE(events.size() == 2);
        CHECK(events[0].kind == VadEvent::Kind::Voice);
        CHECK(events[1].kind == VadEvent::Kind::EndOfVoice);
        const VoiceSpan& span = events[0].span;
        CHECK(span.start_s == doctest::Approx(0.1));
        CHECK(span.end_s == doctest::Approx(1.1));
        // granules cover the padded span without gaps
        CHECK(span.granules.front().start_s <= span.start_s + 1e-9);
        CHECK(span.granules.back().end_s >= span.end_s - 1e-9);
        for (size_t i = 1; i < span.granules.size(); ++i)
            CHECK(span.granules[i].start_s ==
                  doctest::Approx(span.granules[i - 1].end_s));
    }

    TEST_CASE("a short pause is bridged, a long one splits") {
        const auto gs = grid(0.0, 3.0, 0.04, {{0.0, 0.6}, {0.9, 1.4}});
        const auto events = vad_gate(gs, {});
        REQUIRE(events.size() == 2);  // 0.3 s pause < 0.5 s: one region
        const VoiceSpan& span = events[0].span;
        CHECK(span.start_s == doctest::Approx(0.0));
        CHECK(span.end_s == doctest::Approx(1.5));
        for (size_t i = 1; i < span.granules.size(); ++i)
            CHECK(span.granules[i].start_s ==
                  doctest::Approx(span.granules[i - 1].end_s));

        const auto split = vad_gate(grid(0.0, 3.0, 0.04, {{0.0, 0.6}, {1.2, 1.6}}), {});
        REQUIRE(split.size() == 4);  // 0.6 s pause: two regions
        CHECK(split[0].span.end_s == doctest::Approx(0.7));
        CHECK(split[2].span.start_s == doctest::Approx(1.1));
        CHECK(split[2].span.start_s >= split[0].span.end_s - 1e-9);
    }

    TEST_CASE("stream end closes an open region") {
        const auto events = vad_gate(grid(0.0, 1.0, 0.04, {{0.5, 1.0}}), {});
        REQUIRE(events.size() == 2);
        CHECK(events[0].span.end_s == doctest::Approx(1.0));  // pad clamps to the stream
    }

    TEST_CASE("the second region cannot reach into the first") {
        VadConfig cfg;
        cfg.voice_pad_s = 0.3;
        const auto events = vad_gate(grid(0.0, 3.0, 0.04, {{0.0, 1.0}, {1.6, 2.0}}), cfg);
        REQUIRE(events.size() == 4);
        CHECK(events[0].span.end_s == doctest::Approx(1.3));
        CHECK(events[2].span.start_s == doctest::Approx(1.3));
    }

    TEST_CASE("silence-only input gates everything away") {
        CHECK(vad_gate(grid(0.0, 2.0, 0.04, {}), {}).empty());
        CHECK(vad_gate({}, {}).empty());
    }

    TEST_CASE("input validation") {
        std::vector<Granule> bad{{0.0, 0.1, true, 0}, {0.05, 0.15, true, 1}};
        CHECK_THROWS_AS(vad_gate(bad, {}), Error);
        std::vector<Granule> zero{{0.0, 0.0, true, 0}};
        CHECK_THROWS_AS(vad_gate(zero, {}), Error);
        VadConfig cfg;
        cfg.min_silence_s = 0.0;
        CHECK_THROWS_AS(vad_gate(grid(0.0, 1.0, 0.04, {{0.0, 1.0}}), cfg), Error);
    }
}

TEST_SUITE("chunk accumulation") {
    TEST_CASE("chunks close at granule boundaries, the rest flushes as final") {
        const auto events = vad_gate(grid(0.0, 2.2, 0.1, {{0.0, 2.2}}), {});
        const auto chunks = accumulate(events, 1.0, 50.0);
        REQUIRE(chunks.size() == 3);
        CHECK_FALSE(chunks[0].is_final);
        CHECK_FALSE(chunks[1].is_final);
        CHECK(chunks[2].is_final);
        REQUIRE(chunks[2].chunk.has_value());
        CHECK(chunks[0].chunk->start_s == doctest::Approx(0.0));
        CHECK(chunks[0].chunk->end_s == doctest::Approx(1.0));
        CHECK(chunks[1].chunk->end_s == doctest::Approx(2.0));
        CHECK(chunks[2].chunk->end_s == doctest::Approx(2.2));
        CHECK(chunks[0].chunk->frames == 50);
        CHECK(chunks[1].chunk->first_frame == 50);
        CHECK(chunks[2].chunk->first_frame == 100);
        CHECK(chunks[2].chunk->frames == 10);
    }

    TEST_CASE("frames carry the payload of the granule under them") {
        const auto events = vad_gate(grid(0.0, 1.0, 0.1, {{0.0, 1.0}}), {});
        const auto chunks = accumulate(events, 1.0, 50.0);
        REQUIRE(chunks.size() == 2);  // the span ends exactly on the cut
        REQUIRE(chunks[0].chunk.has_value());
        const AudioChunk& c = *chunks[0].chunk;
        REQUIRE(c.frames == 50);
        CHECK(c.payload_per_frame[0] == 0);
        CHECK(c.payload_per_frame[4] == 0);
        CHECK(c.payload_per_frame[5] == 1);
        CHECK(c.payload_per_frame[49] == 9);
    }

    TEST_CASE("a voice span ending exactly on a cut sends a bare final marker") {
        const auto events = vad_gate(grid(0.0, 2.0, 0.1, {{0.0, 2.0}}), {});
        const auto chunks = accumulate(events, 1.0, 50.0);
        REQUIRE(chunks.size() == 3);
        CHECK(chunks[1].chunk.has_value());
        CHECK_FALSE(chunks[2].chunk.has_value());
        CHECK(chunks[2].is_final);
    }

    TEST_CASE("a span shorter than the chunk size flushes once") {
        const auto events = vad_gate(grid(0.0, 0.5, 0.1, {{0.0, 0.5}}), {});
        const auto chunks = accumulate(events, 1.0, 50.0);
        REQUIRE(chunks.size() == 1);
        CHECK(chunks[0].is_final);
        CHECK(chunks[0].chunk->end_s == doctest::Approx(0.5));
    }

    TEST_CASE("validation") {
        CHECK_THROWS_AS(accumulate({}, 0.0, 50.0), Error);
        CHECK_THROWS_AS(accumulate({}, 1.0, 0.0), Error);
    }
}

TEST_SUITE("buffer trimming") {
    TEST_CASE("front chunks drop and their tokens become context words") {
        PipelineConfig cfg;
        cfg.buffer_length_s = 3.0;
        cfg.max_context_length = 10;
        BufferSet b;
        for (int i = 0; i < 3; ++i) b.audio.push_back({chunk_at(i, i + 1, 10.0), i});
        DecodedToken t0, t1;
        t0.text = "early words";
        t1.text = "later";
        b.forced_prefix = {{t0, 0}, {t1, 2}};

        trim_buffers(b, cfg);
        REQUIRE(b.audio.size() == 2);
        CHECK(b.audio.front().seq == 1);
        CHECK(b.context == std::vector<std::string>{"early", "words"});
        REQUIRE(b.forced_prefix.size() == 1);
        CHECK(b.forced_prefix[0].token.text == "later");
    }

    TEST_CASE("a static prompt is never trimmed") {
        PipelineConfig cfg;
        cfg.max_context_length = 3;
        cfg.static_prompt = true;
        BufferSet b;
        b.prompt = {"p1", "p2"};
        b.context = {"c1", "c2", "c3"};
        trim_buffers(b, cfg);
        CHECK(b.prompt == std::vector<std::string>{"p1", "p2"});
        CHECK(b.context == std::vector<std::string>{"c3"});
    }

    TEST_CASE("a non-static prompt is pushed away before context") {
        PipelineConfig cfg;
        cfg.max_context_length = 1;
        cfg.static_prompt = false;
        BufferSet b;
        b.prompt = {"p1", "p2"};
        b.context = {"c1", "c2"};
        trim_buffers(b, cfg);
        CHECK(b.prompt.empty());
        CHECK(b.context == std::vector<std::string>{"c2"});
    }

    TEST_CASE("nothing happens under budget") {
        PipelineConfig cfg;
        cfg.buffer_length_s = 10.0;
        cfg.max_context_length = 10;
        BufferSet b;
        b.audio.push_back({chunk_at(0, 1, 10.0), 0});
        b.context = {"c"};
        trim_buffers(b, cfg);
        CHECK(b.audio.size() == 1);
        CHECK(b.context.size() == 1);
    }
}

TEST_SUITE("oracle decoder") {
    TEST_CASE("script frames must be non-decreasing") {
        CHECK_THROWS_AS(DiagonalOracleDecoder({{0, "a", 10}, {1, "b", 5}}), Error);
    }

    TEST_CASE("missing payloads are named") {
        DiagonalOracleDecoder dec({{0, "a", 1}, {2, "b", 3}});
        CHECK_NOTHROW(dec.require_payloads({0, 2}));
        CHECK_THROWS_WITH_AS(dec.require_payloads({0, 1, 2}),
                             doctest::Contains("payload id 1"), Error);
    }

    TEST_CASE("silent payloads from a script file count as known") {
        namespace fs = std::filesystem;
        const auto path = (fs::temp_directory_path() / "oracle_silent.tsv").string();
        std::ofstream(path) << "# script\n0\thello\t3\n1\n2\tworld\t8\n";
        const auto dec = DiagonalOracleDecoder::from_file(path);
        CHECK_NOTHROW(dec.require_payloads({0, 1, 2}));
        CHECK_THROWS_AS(dec.require_payloads({3}), Error);
    }

    TEST_CASE("tokens before the window are treated as already spoken for") {
        DiagonalOracleDecoder dec({{0, "a", 2}, {0, "b", 5}, {1, "c", 12}});
        AudioWindow win;
        win.first_frame = 10;
        win.payload_per_frame.assign(10, -1);
        auto session = dec.begin_buffer(win, {}, {}, {});
        const auto cands = session->step();
        REQUIRE_FALSE(cands.empty());
        CHECK(cands[0].text == "c");
        CHECK(most_attended_frame(cands[0].attention) == 2);  // frame 12, local
    }

    TEST_CASE("tokens whose audio has not arrived clamp to the window end") {
        DiagonalOracleDecoder dec({{0, "a", 2}, {0, "b", 50}});
        AudioWindow win;
        win.first_frame = 0;
        win.payload_per_frame.assign(10, -1);
        auto session = dec.begin_buffer(win, {}, {}, {"a"});
        const auto cands = session->step();
        CHECK(cands[0].text == "b");
        CHECK(most_attended_frame(cands[0].attention) == 9);
    }

    TEST_CASE("exhausted script ends the sequence") {
        DiagonalOracleDecoder dec({{0, "a", 2}});
        AudioWindow win;
        win.first_frame = 0;
        win.payload_per_frame.assign(10, -1);
        auto session = dec.begin_buffer(win, {}, {}, {"a"});
        const auto cands = session->step();
        REQUIRE(cands.size() == 1);
        CHECK(cands[0].is_end);
    }
}

TEST_SUITE("pipeline") {
    TEST_CASE("tokens flow out update by update behind the threshold") {
        DiagonalOracleDecoder dec({{0, "t0", 2}, {0, "t1", 8}, {1, "t2", 15}, {1, "t3", 18}});
        PipelineConfig cfg;
        cfg.frame_rate = 10.0;
        cfg.alignatt.frames_threshold = 2;
        cfg.alignatt.final_frames_threshold = 1;
        S2tPipeline pipe(cfg, dec);

        const auto ev1 = pipe.process_chunk(chunk_at(0.0, 1.0, 10.0), false);
        REQUIRE(ev1.size() == 1);
        CHECK(ev1[0].unit == "t0");
        CHECK(ev1[0].emission_time_s == doctest::Approx(1.0));
        CHECK(ev1[0].source_consumed_until_s == doctest::Approx(1.0));

        const auto ev2 = pipe.process_chunk(chunk_at(1.0, 2.0, 10.0), false);
        REQUIRE(ev2.size() == 2);
        CHECK(ev2[0].unit == "t1");
        CHECK(ev2[1].unit == "t2");
        CHECK(ev2[0].emission_time_s == doctest::Approx(2.0));

        // attribution: t0, t1 attend chunk 0; t2 attends chunk 1
        const auto& prefix = pipe.state().forced_prefix;
        REQUIRE(prefix.size() == 3);
        CHECK(prefix[0].chunk_seq == 0);
        CHECK(prefix[1].chunk_seq == 0);
        CHECK(prefix[2].chunk_seq == 1);

        const auto ev3 = pipe.finalize();
        REQUIRE(ev3.size() == 1);
        CHECK(ev3[0].unit == "t3");
        CHECK(ev3[0].emission_time_s == doctest::Approx(2.0));
        CHECK(pipe.state().audio.empty());
        CHECK(pipe.state().forced_prefix.empty());
    }

    TEST_CASE("trimmed audio leaves its words behind as context") {
        DiagonalOracleDecoder dec({{0, "t0", 2}, {1, "t1", 12}, {2, "t2", 22}});
        PipelineConfig cfg;
        cfg.frame_rate = 10.0;
        cfg.buffer_length_s = 2.0;
        cfg.max_context_length = 5;
        cfg.alignatt.frames_threshold = 2;
        S2tPipeline pipe(cfg, dec);

        const auto ev1 = pipe.process_chunk(chunk_at(0.0, 1.0, 10.0), false);
        REQUIRE(ev1.size() == 1);
        const auto ev2 = pipe.process_chunk(chunk_at(1.0, 2.0, 10.0), false);
        REQUIRE(ev2.size() == 1);
        CHECK(ev2[0].unit == "t1");
        CHECK(pipe.state().audio.size() == 1);  // the 2 s budget dropped chunk 0
        CHECK(pipe.state().context == std::vector<std::string>{"t0"});

        const auto ev3 = pipe.process_chunk(chunk_at(2.0, 3.0, 10.0), false);
        REQUIRE(ev3.size() == 1);
        CHECK(ev3[0].unit == "t2");
        CHECK(pipe.state().context == std::vector<std::string>{"t0", "t1"});
        REQUIRE(pipe.state().forced_prefix.size() == 1);
        CHECK(pipe.state().forced_prefix[0].token.text == "t2");
    }

    TEST_CASE("a failing decoder leaves the state untouched") {
        struct FlakyDecoder : IncrementalDecoder {
            int calls = 0;
            std::unique_ptr<DecoderSession> begin_buffer(
                const AudioWindow& window, const std::vector<std::string>& prompt,
                const std::vector<std::string>& context,
                const std::vector<std::string>& prefix) override {
                if (++calls == 2) throw Error("decoder exploded");
                static DiagonalOracleDecoder inner{
                    std::vector<OracleEntry>{{0, "a", 2}, {1, "b", 12}}};
                return inner.begin_buffer(window, prompt, context, prefix);
            }
        } dec;
        PipelineConfig cfg;
        cfg.frame_rate = 10.0;
        cfg.alignatt.frames_threshold = 2;
        S2tPipeline pipe(cfg, dec);

        pipe.process_chunk(chunk_at(0.0, 1.0, 10.0), false);
        const auto audio_before = pipe.state().audio.size();
        const auto prefix_before = pipe.state().forced_prefix.size();
        CHECK_THROWS_AS(pipe.process_chunk(chunk_at(1.0, 2.0, 10.0), false), Error);
        CHECK(pipe.state().audio.size() == audio_before);
        CHECK(pipe.state().forced_prefix.size() == prefix_before);
        // the same chunk goes through once the decoder recovers
        const auto ev = pipe.process_chunk(chunk_at(1.0, 2.0, 10.0), false);
        CHECK(ev.size() == 1);
    }

    TEST_CASE("chunks must be frame-contiguous") {
        DiagonalOracleDecoder dec({{0, "a", 2}});
        PipelineConfig cfg;
        cfg.frame_rate = 10.0;
        S2tPipeline pipe(cfg, dec);
        pipe.process_chunk(chunk_at(0.0, 1.0, 10.0), false);
        CHECK_THROWS_AS(pipe.process_chunk(chunk_at(0.5, 1.5, 10.0), false), Error);
        auto gap = chunk_at(2.0, 3.0, 10.0);  // skips frames 10..19
        CHECK_THROWS_AS(pipe.process_chunk(gap, false), Error);
    }

    TEST_CASE("finalize with nothing buffered is a no-op") {
        DiagonalOracleDecoder dec({{0, "a", 2}});
        PipelineConfig cfg;
        cfg.frame_rate = 10.0;
        S2tPipeline pipe(cfg, dec);
        CHECK(pipe.finalize().empty());
    }
}
