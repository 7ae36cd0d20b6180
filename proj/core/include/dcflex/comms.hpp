#pragma once

#include "dcflex/scenario.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace dcflex {

struct Telemetry {
    std::string node_id;
    double u_v = 0.0;
    double p_kw = 0.0;
    NodeMode mode = NodeMode::voltage_source;
    double soc_pct = 100.0; // 100 for non-storage kinds
    bool locked = false;
};

struct ShiftCommand {
    std::string node_id;
    double delta_p_kw = 0.0;
};

struct LockNotice {
    std::string node_id;
};

struct Alarm {
    std::string text;
};

using Message = std::variant<Telemetry, ShiftCommand, LockNotice, Alarm>;

struct ChannelConfig {
    double latency_s = 0.01;
    double drop_probability = 0.0; // in [0,1)
    std::uint64_t seed = 0;
};

struct Envelope {
    double sent_at_s = 0.0;
    double deliver_at_s = 0.0;
    std::uint64_t sequence = 0; // strictly increasing per channel
    Message payload;
};

// One-directional field-bus link with fixed per-hop latency and seeded
// loss. Drop decisions are a pure function of (seed, sequence), so the
// same seed and post schedule give the same delivery schedule.
class Channel {
public:
    Channel() = default;
    explicit Channel(ChannelConfig cfg) : cfg_(cfg) {}

    void post(double now_s, Message msg);

    // Removes and returns every envelope with deliver_at <= now, ordered
    // by (deliver_at, sequence). The boundary is inclusive.
    std::vector<Message> poll_due(double now_s);

    std::size_t pending() const { return queue_.size(); }
    std::uint64_t posted() const { return next_sequence_; }
    std::uint64_t dropped() const { return dropped_; }
    const ChannelConfig& config() const { return cfg_; }

private:
    ChannelConfig cfg_;
    std::uint64_t next_sequence_ = 0;
    std::uint64_t dropped_ = 0;
    std::vector<Envelope> queue_; // kept sorted by (deliver_at, sequence)
};

} // namespace dcflex
