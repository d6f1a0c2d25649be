#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cpsb/time.hpp"

namespace cpsb {

struct TaskInstance {
    int task_index = 0;               // 0-based position in the TaskSet
    std::int64_t instance_index = 1;  // 1-based arrival counter
    Instant arrival;
    Duration computing_time;
    Duration relative_deadline;
};

// One acyclic task: instance k+1 arrives exactly at the absolute deadline of
// instance k. Per-instance (C, T) pairs live in an explicit prefix (realized
// perturbation samples go there); after the prefix the tail pair repeats
// forever. Immutable after construction.
class TaskTrace {
public:
    static TaskTrace periodic(int task_index, Instant first_arrival, Duration c, Duration t);

    // explicit list; after it the tail pair (= last element) repeats
    static TaskTrace from_instances(int task_index, Instant first_arrival,
                                    const std::vector<std::pair<Duration, Duration>>& instances);

    // base (c, t) with c replaced by c + eps_k for the first `count` instances,
    // eps_k drawn as integer microseconds uniform on [lo, hi]; nominal beyond
    static TaskTrace perturbed(int task_index, Instant first_arrival, Duration c, Duration t,
                               Duration lo, Duration hi, std::uint64_t seed, std::int64_t count);

    int task_index() const { return index_; }
    Instant first_arrival() const { return first_; }
    std::int64_t prefix_size() const { return static_cast<std::int64_t>(c_.size()); }

    TaskInstance instance(std::int64_t k) const;  // k >= 1
    TaskInstance effective_instance(Instant t) const;
    std::pair<Duration, Duration> characteristics_at(Instant t) const;

    // copy with instance k's computing time shifted by eps (deadline unchanged)
    TaskTrace with_instance_shift(std::int64_t k, Duration eps) const;

private:
    TaskTrace() = default;
    std::int64_t prefix_index_for(Instant t) const;

    int index_ = 0;
    Instant first_;
    std::vector<Duration> c_, t_;  // realized prefix, may be empty
    std::vector<Instant> arr_;     // arr_[j] = arrival of instance j+1; size = prefix+1
    Duration tail_c_, tail_t_;
};

struct TaskSet {
    std::vector<TaskTrace> tasks;
    int size() const { return static_cast<int>(tasks.size()); }
};

}  // namespace cpsb
