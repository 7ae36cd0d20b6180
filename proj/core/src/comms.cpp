#include "dcflex/comms.hpp"

#include <algorithm>

namespace dcflex {

namespace {

// splitmix64: maps (seed, sequence) to a uniform draw without any stream
// state, so a message's fate never depends on polling order.
double uniform_draw(std::uint64_t seed, std::uint64_t sequence) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (sequence + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

} // namespace

void Channel::post(double now_s, Message msg) {
    const std::uint64_t seq = next_sequence_++;
    if (cfg_.drop_probability > 0.0 &&
        uniform_draw(cfg_.seed, seq) < cfg_.drop_probability) {
        ++dropped_;
        return;
    }
    Envelope env;
    env.sent_at_s = now_s;
    env.deliver_at_s = now_s + cfg_.latency_s;
    env.sequence = seq;
    env.payload = std::move(msg);

    auto pos = std::upper_bound(
        queue_.begin(), queue_.end(), env, [](const Envelope& a, const Envelope& b) {
            if (a.deliver_at_s != b.deliver_at_s) return a.deliver_at_s < b.deliver_at_s;
            return a.sequence < b.sequence;
        });
    queue_.insert(pos, std::move(env));
}

std::vector<Message> Channel::poll_due(double now_s) {
    std::vector<Message> due;
    std::size_t i = 0;
    while (i < queue_.size() && queue_[i].deliver_at_s <= now_s) {
        due.push_back(std::move(queue_[i].payload));
        ++i;
    }
    queue_.erase(queue_.begin(), queue_.begin() + static_cast<std::ptrdiff_t>(i));
    return due;
}

} // namespace dcflex
