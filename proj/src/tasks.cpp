#include "cpsb/tasks.hpp"

#include <algorithm>
#include <string>

#include "cpsb/errors.hpp"
#include "cpsb/rng.hpp"

namespace cpsb {

namespace {

void check_pair(Duration c, Duration t, int index) {
    const std::string tag = "task " + std::to_string(index + 1);
    if (t.us <= 0) throw ConfigError(tag + ": relative deadline must be positive");
    if (c.us < 0) throw NegativeComputingTime(tag + ": computing time below zero");
    if (c > t) throw DeadlineExceeded(tag + ": computing time exceeds relative deadline");
}

}  // namespace

TaskTrace TaskTrace::periodic(int task_index, Instant first_arrival, Duration c, Duration t) {
    check_pair(c, t, task_index);
    TaskTrace tr;
    tr.index_ = task_index;
    tr.first_ = first_arrival;
    tr.arr_ = {first_arrival};
    tr.tail_c_ = c;
    tr.tail_t_ = t;
    return tr;
}

TaskTrace TaskTrace::from_instances(int task_index, Instant first_arrival,
                                    const std::vector<std::pair<Duration, Duration>>& instances) {
    if (instances.empty()) throw ConfigError("task trace needs at least one instance");
    TaskTrace tr;
    tr.index_ = task_index;
    tr.first_ = first_arrival;
    tr.arr_.reserve(instances.size() + 1);
    tr.arr_.push_back(first_arrival);
    for (const auto& [c, t] : instances) {
        check_pair(c, t, task_index);
        tr.c_.push_back(c);
        tr.t_.push_back(t);
        tr.arr_.push_back(tr.arr_.back() + t);
    }
    tr.tail_c_ = instances.back().first;
    tr.tail_t_ = instances.back().second;
    return tr;
}

TaskTrace TaskTrace::perturbed(int task_index, Instant first_arrival, Duration c, Duration t,
                               Duration lo, Duration hi, std::uint64_t seed, std::int64_t count) {
    if (lo > hi) throw ConfigError("perturbation bounds out of order");
    Rng rng(seed);
    std::vector<std::pair<Duration, Duration>> insts;
    insts.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) {
        const Duration eps = Duration::micros(rng.uniform_int(lo.us, hi.us));
        insts.emplace_back(c + eps, t);
    }
    TaskTrace tr = insts.empty() ? periodic(task_index, first_arrival, c, t)
                                 : from_instances(task_index, first_arrival, insts);
    tr.tail_c_ = c;
    tr.tail_t_ = t;
    check_pair(c, t, task_index);
    return tr;
}

TaskInstance TaskTrace::instance(std::int64_t k) const {
    const std::int64_t prefix = prefix_size();
    TaskInstance inst;
    inst.task_index = index_;
    inst.instance_index = k;
    if (k <= prefix) {
        inst.arrival = arr_[static_cast<std::size_t>(k - 1)];
        inst.computing_time = c_[static_cast<std::size_t>(k - 1)];
        inst.relative_deadline = t_[static_cast<std::size_t>(k - 1)];
    } else {
        inst.arrival = arr_.back() + tail_t_ * (k - 1 - prefix);
        inst.computing_time = tail_c_;
        inst.relative_deadline = tail_t_;
    }
    return inst;
}

std::int64_t TaskTrace::prefix_index_for(Instant t) const {
    // largest j with arr_[j] <= t, within the prefix arrival table
    const auto it = std::upper_bound(arr_.begin(), arr_.end(), t);
    return static_cast<std::int64_t>(it - arr_.begin()) - 1;
}

TaskInstance TaskTrace::effective_instance(Instant t) const {
    if (t < first_)
        throw QueryBeforeFirstArrival("task " + std::to_string(index_ + 1) +
                                      " queried before its first arrival");
    if (t >= arr_.back()) {
        const std::int64_t extra = (t - arr_.back()).us / tail_t_.us;
        return instance(prefix_size() + extra + 1);
    }
    return instance(prefix_index_for(t) + 1);
}

std::pair<Duration, Duration> TaskTrace::characteristics_at(Instant t) const {
    const TaskInstance inst = effective_instance(t);
    return {inst.computing_time, inst.relative_deadline};
}

TaskTrace TaskTrace::with_instance_shift(std::int64_t k, Duration eps) const {
    const std::int64_t prefix = prefix_size();
    const std::int64_t need = std::max(k, prefix);
    std::vector<std::pair<Duration, Duration>> insts;
    insts.reserve(static_cast<std::size_t>(need));
    for (std::int64_t j = 1; j <= need; ++j) {
        TaskInstance inst = instance(j);
        if (j == k) inst.computing_time += eps;
        insts.emplace_back(inst.computing_time, inst.relative_deadline);
    }
    TaskTrace tr = from_instances(index_, first_, insts);
    tr.tail_c_ = tail_c_;
    tr.tail_t_ = tail_t_;
    return tr;
}

}  // namespace cpsb
