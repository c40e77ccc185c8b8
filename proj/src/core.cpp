#include "streamsim/core.hpp"

#include <cmath>
#include <utility>

namespace streamsim {

double unaware_clock_stamp(double consumed_source_end_s) {
    if (!(consumed_source_end_s >= 0.0) || !std::isfinite(consumed_source_end_s))
        throw Error("unaware_clock_stamp: consumed source end must be finite and >= 0");
    return consumed_source_end_s;
}

void EventLog::append(std::string unit, double emission_time_s, double source_consumed_until_s) {
    if (!std::isfinite(emission_time_s) || emission_time_s < 0.0)
        throw Error("event log: emission time must be finite and >= 0");
    if (!events_.empty() && emission_time_s < events_.back().emission_time_s - 1e-12)
        throw Error("event log: emission times must be non-decreasing");
    events_.push_back({std::move(unit), emission_time_s, source_consumed_until_s});
}

void EventLog::append(const EmissionEvent& ev) {
    append(ev.unit, ev.emission_time_s, ev.source_consumed_until_s);
}

void validate_attention(const AttentionSnapshot& snapshot) {
    if (snapshot.weights.empty()) throw Error("attention snapshot: no weights");
    double sum = 0.0;
    for (double w : snapshot.weights) {
        if (!(w >= 0.0)) throw Error("attention snapshot: negative weight");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-6) throw Error("attention snapshot: weights do not sum to 1");
}

}  // namespace streamsim
