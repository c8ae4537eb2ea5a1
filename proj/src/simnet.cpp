#include "taskfarm/simnet.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <queue>
#include <sstream>

#include "taskfarm/dispatcher.hpp"
#include "taskfarm/log.hpp"
#include "taskfarm/rng.hpp"

namespace taskfarm {

namespace {

Channel channel_between(Role from, Role to) {
    if (from == Role::Farmer && to == Role::Dispatcher)
        return Channel::FarmerToDispatcher;
    if (from == Role::Dispatcher && to == Role::Farmer)
        return Channel::DispatcherToFarmer;
    if (from == Role::Dispatcher && to == Role::Worker)
        return Channel::DispatcherToWorker;
    if (from == Role::Worker && to == Role::Dispatcher)
        return Channel::WorkerToDispatcher;
    if (from == Role::Worker && to == Role::Collector)
        return Channel::WorkerToCollector;
    if (from == Role::Collector && to == Role::Dispatcher)
        return Channel::CollectorToDispatcher;
    if (from == Role::Dispatcher && to == Role::Collector)
        return Channel::DispatcherToCollector;
    throw Error("no channel between " + std::to_string(int(from)) + " and " +
                std::to_string(int(to)));
}

// Sim-side envelope metadata, never serialized:
//  - origin_run tags work and output couples with the run whose data they
//    carry, so too-late straggler outputs can be discarded;
//  - incarnation tags requests and their replies with the requester's
//    reboot count, so a reply overtaken by a crash+rejoin is not handed
//    to the fresh incarnation.
struct Deliver {
    Endpoint from;
    Endpoint to;
    Message msg;
    std::uint32_t origin_run = 0;
    std::uint32_t incarnation = 0;
};

struct ComputeDone {
    WorkerId worker;
    std::uint64_t epoch = 0;
};

struct FaultHit {
    FaultKind kind = FaultKind::Crash;
    WorkerId worker;
    double factor = 0.0;
};

using EventPayload = std::variant<Deliver, ComputeDone, FaultHit>;

struct Event {
    Tick time = 0;
    std::uint64_t seq = 0;
    EventPayload payload;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

class Simulation {
  public:
    explicit Simulation(const Scenario& sc)
        : sc_(sc),
          dispatcher_(sc.blocks, sc.workers, sc.threshold,
                      rng::substream(sc.seed, 1)),
          farmer_(sc.blocks, make_synthetic_camera(sc.camera_seed,
                                                   sc.image_size, sc.images)),
          collector_(sc.blocks),
          jitter_rng_(rng::engine(rng::substream(sc.seed, 2))) {
        workers_.reserve(sc.workers);
        for (std::uint32_t j = 1; j <= sc.workers; ++j) {
            WorkerId id{j};
            ComputeCost cost{sc.compute.base_ticks,
                             sc.compute.multiplier_for(id)};
            workers_.push_back(
                WorkerRec{Worker(id, make_worker_fn(sc.worker_fn, id), cost)});
        }
    }

    SimResult run() {
        schedule_faults();
        if (sc_.stop_at) {
            schedule(*sc_.stop_at, Deliver{Endpoint::farmer(),
                                           Endpoint::dispatcher(), Stop{}});
        }
        route(Endpoint::farmer(), farmer_.bootstrap());
        for (auto& rec : workers_) {
            send_request(rec);
        }

        while (!queue_.empty() && !halted_) {
            Event ev = queue_.top();
            queue_.pop();
            now_ = ev.time;
            std::visit([&](auto& payload) { handle(payload); }, ev.payload);
        }

        SimResult result;
        result.trace = std::move(trace_);
        result.artifacts = std::move(artifacts_);
        if (halted_) {
            result.status = SimStatus::AlarmHalted;
            result.diagnostic = halt_reason_;
        } else if (quiescent()) {
            result.status = SimStatus::Completed;
        } else {
            result.status = SimStatus::Deadlock;
            result.diagnostic = deadlock_diagnostic();
        }
        result.metrics = metrics_from_trace(result.trace, sc_);
        return result;
    }

  private:
    struct WorkerRec {
        Worker actor;
        bool alive = true;
        double slow_factor = 1.0;
        std::uint64_t epoch = 0;
        bool computing = false;
        Tick done_at = 0;
        std::uint32_t origin_run = 0;
        std::uint32_t incarnation = 0;
    };

    void schedule(Tick t, EventPayload payload) {
        queue_.push(Event{t, next_seq_++, std::move(payload)});
    }

    void schedule_faults() {
        for (const FaultSpec& fault : sc_.faults) {
            if (const auto* crash = std::get_if<CrashFault>(&fault)) {
                schedule(crash->at,
                         FaultHit{FaultKind::Crash, crash->worker, 0.0});
            } else if (const auto* rejoin = std::get_if<RejoinFault>(&fault)) {
                schedule(rejoin->at,
                         FaultHit{FaultKind::Rejoin, rejoin->worker, 0.0});
            } else {
                const auto& slow = std::get<SlowdownFault>(fault);
                if (slow.factor == 1.0) {
                    continue;  // identity factor: a no-op by definition
                }
                schedule(slow.from, FaultHit{FaultKind::SlowdownStart,
                                             slow.worker, slow.factor});
                if (slow.until) {
                    schedule(*slow.until, FaultHit{FaultKind::SlowdownEnd,
                                                   slow.worker, slow.factor});
                }
            }
        }
    }

    void send(Endpoint from, Endpoint to, Message msg,
              std::uint32_t origin_run = 0, std::uint32_t incarnation = 0) {
        Tick lat = sc_.latency.hop(channel_between(from.role, to.role));
        schedule(now_ + lat,
                 Deliver{from, to, std::move(msg), origin_run, incarnation});
    }

    void route(Endpoint from, const std::vector<Send>& sends,
               std::uint32_t origin_run = 0, std::uint32_t incarnation = 0) {
        for (const Send& s : sends) {
            send(from, s.to, s.msg, origin_run, incarnation);
        }
    }

    void send_request(WorkerRec& rec) {
        route(Endpoint::worker(rec.actor.id()), {rec.actor.initial_request()},
              0, rec.incarnation);
    }

    WorkerRec& rec_of(WorkerId j) {
        if (j.value == 0 || j.value > workers_.size()) {
            throw UnknownWorker("worker " + std::to_string(j.value));
        }
        return workers_[j.value - 1];
    }

    Tick compute_duration(const WorkerRec& rec) {
        double base = static_cast<double>(rec.actor.cost().base_ticks) *
                      rec.actor.cost().multiplier;
        Tick jitter =
            sc_.compute.jitter_ticks == 0
                ? 0
                : static_cast<Tick>(rng::uniform_index(
                      jitter_rng_, static_cast<std::size_t>(
                                       sc_.compute.jitter_ticks + 1)));
        double d = (base + static_cast<double>(jitter)) * rec.slow_factor;
        auto ticks = static_cast<Tick>(std::llround(d));
        return ticks == 0 ? 1 : ticks;
    }

    void start_compute(WorkerRec& rec, std::uint32_t origin_run) {
        rec.origin_run = origin_run;
        rec.computing = true;
        rec.done_at = now_ + compute_duration(rec);
        ++rec.epoch;
        schedule(rec.done_at, ComputeDone{rec.actor.id(), rec.epoch});
    }

    void cancel_compute(WorkerRec& rec) {
        rec.computing = false;
        ++rec.epoch;
    }

    // --- event handlers --------------------------------------------------

    void handle(const FaultHit& fault) {
        WorkerRec& rec = rec_of(fault.worker);
        trace_.records.emplace_back(
            FaultRecord{now_, fault.kind, fault.worker, fault.factor});
        switch (fault.kind) {
            case FaultKind::Crash:
                rec.alive = false;
                cancel_compute(rec);
                break;
            case FaultKind::Rejoin: {
                rec.alive = true;
                cancel_compute(rec);
                ++rec.incarnation;
                WorkerId id = fault.worker;
                rec.actor = Worker(id, make_worker_fn(sc_.worker_fn, id),
                                   ComputeCost{sc_.compute.base_ticks,
                                               sc_.compute.multiplier_for(id)});
                send_request(rec);
                break;
            }
            case FaultKind::SlowdownStart:
                rec.slow_factor = fault.factor;
                reschedule_pending(rec, fault.factor);
                break;
            case FaultKind::SlowdownEnd:
                rec.slow_factor = 1.0;
                reschedule_pending(rec, 1.0 / fault.factor);
                break;
        }
    }

    void reschedule_pending(WorkerRec& rec, double stretch) {
        if (!rec.alive || !rec.computing) {
            return;
        }
        auto remaining = static_cast<double>(rec.done_at - now_);
        auto stretched = static_cast<Tick>(std::llround(remaining * stretch));
        if (stretched == 0) {
            stretched = 1;
        }
        rec.done_at = now_ + stretched;
        ++rec.epoch;
        schedule(rec.done_at, ComputeDone{rec.actor.id(), rec.epoch});
    }

    void handle(const ComputeDone& done) {
        WorkerRec& rec = rec_of(done.worker);
        if (!rec.alive || done.epoch != rec.epoch || !rec.computing) {
            return;  // cancelled or superseded
        }
        rec.computing = false;
        std::vector<Send> sends = rec.actor.step(ComputeComplete{});
        route(Endpoint::worker(done.worker), sends, rec.origin_run,
              rec.incarnation);
    }

    void handle(const Deliver& d) {
        trace_.records.emplace_back(MessageRecord{now_, d.from, d.to, d.msg});
        switch (d.to.role) {
            case Role::Dispatcher: deliver_to_dispatcher(d); break;
            case Role::Worker: deliver_to_worker(d); break;
            case Role::Collector: deliver_to_collector(d); break;
            case Role::Farmer: deliver_to_farmer(d); break;
        }
    }

    void deliver_to_dispatcher(const Deliver& d) {
        if (dispatcher_stopped_) {
            // Late requests (e.g. a worker rejoining after shutdown) are
            // told to stop; everything else is ignored.
            if (const auto* req = std::get_if<Request>(&d.msg)) {
                send(Endpoint::dispatcher(), Endpoint::worker(req->worker),
                     Stop{}, 0, d.incarnation);
            }
            return;
        }
        if (const auto* couple = std::get_if<BlockCouple>(&d.msg)) {
            dispatcher_.on_block_couple(couple->id, couple->block);
        } else if (std::holds_alternative<NewRun>(d.msg)) {
            route(Endpoint::dispatcher(), dispatcher_.on_new_run());
        } else if (std::holds_alternative<Stop>(d.msg)) {
            dispatcher_stopped_ = true;
            route(Endpoint::dispatcher(), dispatcher_.on_stop());
        } else if (const auto* req = std::get_if<Request>(&d.msg)) {
            Assignment a = dispatcher_.select_block(req->worker);
            if (const auto* work = std::get_if<WorkAssignment>(&a)) {
                if (auto alarm = dispatcher_.check_threshold(work->block)) {
                    trace_.records.emplace_back(
                        AlarmRecord{now_, alarm->block, alarm->count});
                    log::warn("alarm: block ", alarm->block.value, " picked ",
                              alarm->count, " times (threshold ",
                              sc_.threshold, ")");
                    if (sc_.alarm_policy == AlarmPolicy::Halt) {
                        halted_ = true;
                        halt_reason_ = "alarm on block " +
                                       std::to_string(alarm->block.value) +
                                       " (count " +
                                       std::to_string(alarm->count) +
                                       ") with halt policy";
                        return;
                    }
                }
                send(Endpoint::dispatcher(), Endpoint::worker(req->worker),
                     WorkCouple{work->block, work->data},
                     dispatcher_.runs_started(), d.incarnation);
            } else {
                send(Endpoint::dispatcher(), Endpoint::worker(req->worker),
                     Sleep{}, 0, d.incarnation);
            }
        } else if (const auto* ack = std::get_if<SlotAck>(&d.msg)) {
            route(Endpoint::dispatcher(), dispatcher_.on_slot_ack(ack->id));
        } else {
            throw ProtocolError("dispatcher cannot handle " +
                                message_to_string(d.msg));
        }
    }

    void deliver_to_worker(const Deliver& d) {
        WorkerRec& rec = rec_of(WorkerId{d.to.index});
        if (!rec.alive || rec.actor.mode() == WorkerMode::Stopped) {
            return;  // delivered-and-dropped so senders never wedge
        }
        // A reply whose request predates the worker's last reboot belongs to
        // the previous incarnation; the fresh process never sees it.
        bool is_reply = std::holds_alternative<WorkCouple>(d.msg) ||
                        std::holds_alternative<Sleep>(d.msg);
        if (is_reply && d.incarnation < rec.incarnation) {
            return;
        }
        WorkerMode before = rec.actor.mode();
        std::vector<Send> sends = rec.actor.step(d.msg);
        WorkerMode after = rec.actor.mode();
        if (before != WorkerMode::Computing && after == WorkerMode::Computing) {
            start_compute(rec, d.origin_run);
        } else if (before == WorkerMode::Computing &&
                   after != WorkerMode::Computing) {
            cancel_compute(rec);
        }
        route(Endpoint::worker(rec.actor.id()), sends, rec.origin_run,
              rec.incarnation);
    }

    void deliver_to_collector(const Deliver& d) {
        if (collector_.stopped()) {
            return;
        }
        if (const auto* out = std::get_if<OutputCouple>(&d.msg)) {
            if (d.origin_run <= collector_.runs_completed()) {
                // Too late: the run this output belongs to already finished.
                trace_.records.emplace_back(
                    DiscardRecord{now_, out->id, d.origin_run});
                return;
            }
            CollectorResult result = collector_.on_output(out->id, out->output);
            route(Endpoint::collector(), result.messages);
            if (result.artifact) {
                artifacts_.push_back(std::move(*result.artifact));
            }
        } else if (std::holds_alternative<Stop>(d.msg)) {
            collector_.on_stop();
        } else {
            throw ProtocolError("collector cannot handle " +
                                message_to_string(d.msg));
        }
    }

    void deliver_to_farmer(const Deliver& d) {
        if (const auto* ack = std::get_if<BlockAck>(&d.msg)) {
            route(Endpoint::farmer(), farmer_.on_block_ack(ack->id));
        } else {
            throw ProtocolError("farmer cannot handle " +
                                message_to_string(d.msg));
        }
    }

    // --- termination -----------------------------------------------------

    bool quiescent() const {
        if (!collector_.stopped()) {
            return false;
        }
        for (const WorkerRec& rec : workers_) {
            if (rec.alive && rec.actor.mode() != WorkerMode::Stopped) {
                return false;
            }
        }
        return true;
    }

    std::string deadlock_diagnostic() const {
        std::ostringstream os;
        os << "no events pending at t=" << now_ << " but the farm is not done:";
        if (!collector_.stopped()) {
            os << " collector waiting with " << collector_.busy_slots() << "/"
               << sc_.blocks << " slots filled;";
        }
        if (!farmer_.finished()) {
            os << " farmer waiting for "
               << (sc_.blocks - farmer_.acked().size()) << " acks;";
        }
        for (const WorkerRec& rec : workers_) {
            if (!rec.alive) {
                os << " worker " << rec.actor.id().value << " crashed;";
            } else if (rec.actor.mode() != WorkerMode::Stopped) {
                const char* mode =
                    rec.actor.mode() == WorkerMode::Sleeping    ? "sleeping"
                    : rec.actor.mode() == WorkerMode::Computing ? "computing"
                                                                : "requesting";
                os << " worker " << rec.actor.id().value << ' ' << mode << ';';
            }
        }
        return os.str();
    }

    const Scenario& sc_;
    Dispatcher dispatcher_;
    Farmer farmer_;
    Collector collector_;
    std::vector<WorkerRec> workers_;
    bool dispatcher_stopped_ = false;
    std::mt19937_64 jitter_rng_;

    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::uint64_t next_seq_ = 0;
    Tick now_ = 0;
    EventTrace trace_;
    std::vector<FinalArtifact> artifacts_;
    bool halted_ = false;
    std::string halt_reason_;
};

}  // namespace

SimResult run_scenario(const Scenario& sc) {
    sc.validate();
    Simulation sim(sc);
    return sim.run();
}

ReplayVerdict replay(const EventTrace& trace, const Scenario& sc) {
    SimResult result = run_scenario(sc);
    return compare_traces(trace, result.trace);
}

// --- metrics ---------------------------------------------------------------

namespace {

struct WorkerModel {
    bool alive = true;
    bool stopped = false;
    bool computing = false;
    int outputs_pending = 0;  // spans closed early by reply records
    Tick busy_since = 0;
    Tick busy_total = 0;

    void close_span(Tick t) {
        if (computing) {
            busy_total += t - busy_since;
            computing = false;
        }
    }
};

}  // namespace

Metrics metrics_from_trace(const EventTrace& trace, const Scenario& sc) {
    Metrics m;
    m.scenario = sc.name;
    m.worker_utilization.assign(sc.workers, 0.0);

    // Dispatcher-side model.
    std::uint32_t dispatcher_run = 0;  // NEW_RUNs seen (current 1-based run)
    bool dispatcher_stopped = false;
    std::vector<Tick> newrun_times;
    std::map<std::uint32_t, std::uint32_t> assigns_this_run;

    std::map<std::uint32_t, RunMetrics> per_run;
    auto row = [&](std::uint32_t run) -> RunMetrics& {
        RunMetrics& r = per_run[run];
        r.run = run;
        return r;
    };

    // Collector-side model.
    std::vector<bool> busy(sc.blocks, false);
    std::vector<Bytes> stored(sc.blocks);
    std::uint32_t collector_run = 1;
    std::uint32_t filled = 0;
    bool collector_stopped = false;

    std::vector<WorkerModel> workers(sc.workers);

    const auto& records = trace.records;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (std::get_if<AlarmRecord>(&records[i]) != nullptr) {
            ++m.alarms;
            if (dispatcher_run > 0) {
                ++row(dispatcher_run).alarms;
            }
            continue;
        }
        if (const auto* fault = std::get_if<FaultRecord>(&records[i])) {
            WorkerModel& w = workers[fault->worker.value - 1];
            if (fault->kind == FaultKind::Crash) {
                w.close_span(fault->time);
                w.alive = false;
            } else if (fault->kind == FaultKind::Rejoin) {
                w.alive = true;
                w.stopped = false;
                w.computing = false;
                w.outputs_pending = 0;
            }
            continue;
        }
        if (std::get_if<DiscardRecord>(&records[i]) != nullptr) {
            ++m.cross_run_stragglers;
            continue;
        }

        const auto& rec = std::get<MessageRecord>(records[i]);
        if (rec.receiver.role == Role::Dispatcher) {
            if (std::holds_alternative<NewRun>(rec.msg) && !dispatcher_stopped) {
                ++dispatcher_run;
                newrun_times.push_back(rec.time);
                assigns_this_run.clear();
            } else if (std::holds_alternative<Stop>(rec.msg)) {
                dispatcher_stopped = true;
            }
            continue;
        }

        if (rec.receiver.role == Role::Worker) {
            WorkerModel& w = workers[rec.receiver.index - 1];
            if (const auto* work = std::get_if<WorkCouple>(&rec.msg)) {
                std::uint32_t count = ++assigns_this_run[work->id.value];
                if (count >= 2 && dispatcher_run > 0) {
                    ++m.redundant_assignments;
                    ++row(dispatcher_run).redundant_assignments;
                }
                if (w.alive && !w.stopped) {
                    // A reply reaching a still-open span means the matching
                    // output record has not been walked yet.
                    if (w.computing) {
                        w.close_span(rec.time);
                        ++w.outputs_pending;
                    }
                    w.computing = true;
                    w.busy_since = rec.time;
                }
            } else if (std::holds_alternative<Sleep>(rec.msg)) {
                if (w.alive && !w.stopped && w.computing) {
                    w.close_span(rec.time);
                    ++w.outputs_pending;
                }
            } else if (std::holds_alternative<Resume>(rec.msg)) {
                if (w.alive && !w.stopped) {
                    w.close_span(rec.time);  // abandon
                }
            } else if (std::holds_alternative<Stop>(rec.msg)) {
                if (w.alive && !w.stopped) {
                    w.close_span(rec.time);
                    w.stopped = true;
                }
            }
            continue;
        }

        if (rec.receiver.role == Role::Collector) {
            if (const auto* out = std::get_if<OutputCouple>(&rec.msg)) {
                if (rec.sender.role == Role::Worker) {
                    WorkerModel& w = workers[rec.sender.index - 1];
                    if (w.outputs_pending > 0) {
                        --w.outputs_pending;
                    } else {
                        w.close_span(rec.time);
                    }
                }
                if (collector_stopped) {
                    continue;
                }
                bool discarded =
                    i + 1 < records.size() &&
                    std::holds_alternative<DiscardRecord>(records[i + 1]) &&
                    std::get<DiscardRecord>(records[i + 1]).block == out->id;
                if (discarded) {
                    continue;
                }
                std::size_t slot = out->id.value - 1;
                if (!busy[slot]) {
                    busy[slot] = true;
                    stored[slot] = out->output.payload;
                    if (++filled == sc.blocks) {
                        RunMetrics& r = row(collector_run);
                        Tick start = collector_run <= newrun_times.size()
                                         ? newrun_times[collector_run - 1]
                                         : 0;
                        r.makespan_ticks = rec.time - start;
                        ++m.runs_completed;
                        filled = 0;
                        std::fill(busy.begin(), busy.end(), false);
                        ++collector_run;
                    }
                } else {
                    ++m.duplicate_outputs;
                    ++row(collector_run).duplicates;
                    if (stored[slot] != out->output.payload) {
                        ++m.mismatches;
                        ++row(collector_run).mismatches;
                    }
                }
            } else if (std::holds_alternative<Stop>(rec.msg)) {
                if (!collector_stopped) {
                    collector_stopped = true;
                    m.partials_on_stop = filled;
                }
            }
            continue;
        }
    }

    Tick span = records.empty() ? 1 : record_time(records.back());
    if (span == 0) {
        span = 1;
    }
    for (std::uint32_t j = 0; j < sc.workers; ++j) {
        m.worker_utilization[j] = static_cast<double>(workers[j].busy_total) /
                                  static_cast<double>(span);
    }

    for (std::uint32_t run = 1; run <= m.runs_completed; ++run) {
        m.runs.push_back(row(run));
    }
    return m;
}

std::string Metrics::to_csv(bool with_header) const {
    std::ostringstream os;
    if (with_header) {
        os << kCsvHeader << '\n';
    }
    for (const RunMetrics& r : runs) {
        os << scenario << ',' << r.run << ',' << r.makespan_ticks << ','
           << r.redundant_assignments << ',' << r.alarms << ',' << r.duplicates
           << ',' << r.mismatches << '\n';
    }
    return os.str();
}

std::string Metrics::summary_csv(bool with_header) const {
    std::ostringstream os;
    if (with_header) {
        os << kSummaryHeader << '\n';
    }
    os << scenario << ',' << runs_completed << ',' << duplicate_outputs << ','
       << mismatches << ',' << partials_on_stop << ',' << cross_run_stragglers
       << ',' << alarms << ',';
    os << std::fixed << std::setprecision(6);
    for (std::size_t j = 0; j < worker_utilization.size(); ++j) {
        if (j > 0) os << ';';
        os << worker_utilization[j];
    }
    os << '\n';
    return os.str();
}

}  // namespace taskfarm
