#ifndef SDM_RUNTIME_HPP
#define SDM_RUNTIME_HPP

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "sdm/bytes.hpp"
#include "sdm/errors.hpp"

namespace sdm {

/// How the logical ranks of a job are scheduled.
///  - Threads:  one OS thread per rank, free-running between collectives.
///  - Lockstep: one OS thread per rank but only one runs at a time; the turn
///    passes round-robin at collective boundaries. Results must be identical
///    to Threads; this mode exists for debugging.
enum class ExecPolicy { Threads, Lockstep };

struct JobStats {
    std::uint64_t barriers = 0;
    std::uint64_t ring_shifts = 0;
    std::uint64_t broadcasts = 0;
    std::uint64_t gathers = 0;
};

namespace detail {

/// Shared rendezvous for one job. All four collectives are the same
/// exchange: every live rank deposits a payload, the last arriver combines
/// them into per-rank outputs, everyone leaves with its own slot.
class JobState {
public:
    enum class Op : std::uint8_t { None, Barrier, Ring, Bcast, Gather };

    JobState(int nprocs, ExecPolicy policy);

    int nprocs() const { return nprocs_; }

    Bytes exchange(int rank, Op op, int root, Bytes payload,
                   std::vector<Bytes>* gather_out);

    void rank_started(int rank);
    void rank_exited(int rank);
    void rank_failed(int rank, ErrorKind kind, const std::string& what);

    /// After all rank threads joined: rethrow the job failure, typed as the
    /// original error of the first rank that failed.
    void rethrow_if_failed() const;

    JobStats stats() const;

private:
    void fail_locked(int rank, ErrorKind kind, const std::string& what);
    void complete_locked();
    void check_deadlock_locked();
    [[noreturn]] void throw_failure_locked() const;

    // Lockstep turn passing. No-ops under ExecPolicy::Threads.
    enum class LsState : std::uint8_t { Ready, Blocked, Done };
    void ls_wait_turn(std::unique_lock<std::mutex>& lk, int rank);
    void ls_yield(int rank, LsState st);
    void ls_advance_from(int rank);

    int nprocs_;
    ExecPolicy policy_;

    mutable std::mutex m_;
    std::condition_variable cv_;

    // Current collective generation.
    Op op_ = Op::None;
    int op_root_ = -1;
    std::uint64_t gen_ = 0;
    int arrived_ = 0;
    std::vector<Bytes> in_;
    std::vector<Bytes> out_;
    std::vector<Bytes> gathered_;
    bool gather_ready_ = false;

    // Liveness.
    int exited_ = 0;
    bool failed_ = false;
    int fail_rank_ = -1;
    ErrorKind fail_kind_ = ErrorKind::None;
    std::string fail_what_;

    // Lockstep scheduling.
    int turn_ = 0;
    std::vector<LsState> ls_;

    JobStats stats_;
};

} // namespace detail

/// Per-rank view of a running job: rank identity plus the four collectives
/// (barrier, ring-shift, broadcast, gather-to-root). Payloads are opaque
/// byte strings; no other channel exists between ranks.
class RankContext {
public:
    RankContext(detail::JobState& job, int rank) : job_(&job), rank_(rank) {}

    int rank() const { return rank_; }
    int nprocs() const { return job_->nprocs(); }

    void barrier() {
        job_->exchange(rank_, detail::JobState::Op::Barrier, -1, {}, nullptr);
    }

    /// Sends `payload` to rank (r+1) mod n, returns the payload received
    /// from rank (r-1+n) mod n.
    Bytes ring_shift(Bytes payload) {
        return job_->exchange(rank_, detail::JobState::Op::Ring, -1, std::move(payload),
                              nullptr);
    }

    /// Every rank receives root's payload.
    Bytes broadcast(int root, Bytes payload) {
        return job_->exchange(rank_, detail::JobState::Op::Bcast, root, std::move(payload),
                              nullptr);
    }

    /// Root receives all payloads indexed by rank; other ranks get {}.
    std::vector<Bytes> gather(int root, Bytes payload) {
        std::vector<Bytes> out;
        job_->exchange(rank_, detail::JobState::Op::Gather, root, std::move(payload), &out);
        return out;
    }

    /// All-or-nothing check: runs `f` on every rank; if any rank threw, all
    /// ranks throw the lowest-ranked failure with its original type.
    template <typename F>
    void agree(F&& f) {
        ErrorKind kind = ErrorKind::None;
        std::string what;
        try {
            f();
        } catch (const Error& e) {
            kind = e.kind();
            what = e.what();
        } catch (const std::exception& e) {
            kind = ErrorKind::Internal;
            what = e.what();
        }
        ByteWriter w;
        w.u32(static_cast<std::uint32_t>(kind));
        w.str(what);
        auto votes = gather(0, w.take());
        ByteWriter verdict;
        if (rank_ == 0) {
            std::uint32_t vk = 0;
            std::string vw;
            for (auto& v : votes) {
                ByteReader r(v);
                std::uint32_t k = r.u32();
                std::string s = r.str();
                if (k != 0) {
                    vk = k;
                    vw = s;
                    break;
                }
            }
            verdict.u32(vk);
            verdict.str(vw);
        }
        Bytes decided = broadcast(0, verdict.take());
        ByteReader r(decided);
        std::uint32_t k = r.u32();
        std::string s = r.str();
        if (k != 0) throw_error(static_cast<ErrorKind>(k), s);
    }

    /// Root evaluates `f` and the encoded result (or the root's failure) is
    /// delivered to every rank. Built on broadcast.
    Bytes root_eval(int root, const std::function<Bytes()>& f) {
        ByteWriter w;
        if (rank_ == root) {
            ErrorKind kind = ErrorKind::None;
            std::string what;
            Bytes value;
            try {
                value = f();
            } catch (const Error& e) {
                kind = e.kind();
                what = e.what();
            } catch (const std::exception& e) {
                kind = ErrorKind::Internal;
                what = e.what();
            }
            w.u32(static_cast<std::uint32_t>(kind));
            if (kind == ErrorKind::None)
                w.bytes(value);
            else
                w.str(what);
        }
        Bytes decided = broadcast(root, w.take());
        ByteReader r(decided);
        auto kind = static_cast<ErrorKind>(r.u32());
        if (kind != ErrorKind::None) throw_error(kind, r.str());
        return r.bytes();
    }

private:
    detail::JobState* job_;
    int rank_;
};

struct RunReport {
    JobStats stats;
};

namespace detail {

template <typename F>
using rank_result_t = std::invoke_result_t<F&, RankContext&>;

template <typename F, typename R>
struct RankRunner {
    static std::vector<R> run(int nprocs, F& body, ExecPolicy policy, RunReport* report) {
        JobState job(nprocs, policy);
        std::vector<std::optional<R>> slots(static_cast<std::size_t>(nprocs));
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(nprocs));
        for (int r = 0; r < nprocs; ++r) {
            threads.emplace_back([&job, &body, &slots, r] {
                RankContext ctx(job, r);
                job.rank_started(r);
                try {
                    slots[static_cast<std::size_t>(r)].emplace(body(ctx));
                    job.rank_exited(r);
                } catch (const Error& e) {
                    job.rank_failed(r, e.kind(), e.what());
                } catch (const std::exception& e) {
                    job.rank_failed(r, ErrorKind::Internal, e.what());
                }
            });
        }
        for (auto& t : threads) t.join();
        job.rethrow_if_failed();
        if (report) report->stats = job.stats();
        std::vector<R> results;
        results.reserve(static_cast<std::size_t>(nprocs));
        for (auto& s : slots) results.push_back(std::move(*s));
        return results;
    }
};

template <typename F>
struct RankRunner<F, void> {
    static void run(int nprocs, F& body, ExecPolicy policy, RunReport* report) {
        JobState job(nprocs, policy);
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(nprocs));
        for (int r = 0; r < nprocs; ++r) {
            threads.emplace_back([&job, &body, r] {
                RankContext ctx(job, r);
                job.rank_started(r);
                try {
                    body(ctx);
                    job.rank_exited(r);
                } catch (const Error& e) {
                    job.rank_failed(r, e.kind(), e.what());
                } catch (const std::exception& e) {
                    job.rank_failed(r, ErrorKind::Internal, e.what());
                }
            });
        }
        for (auto& t : threads) t.join();
        job.rethrow_if_failed();
        if (report) report->stats = job.stats();
    }
};

} // namespace detail

/// Runs `body(RankContext&)` on nprocs logical ranks and returns the
/// per-rank results. A rank failure or a detected deadlock fails the whole
/// job with the offending rank named.
template <typename F>
auto run_ranks(int nprocs, F&& body, ExecPolicy policy = ExecPolicy::Threads,
               RunReport* report = nullptr) {
    if (nprocs < 1) throw ValidationError("nprocs must be >= 1");
    using R = detail::rank_result_t<F>;
    return detail::RankRunner<F, R>::run(nprocs, body, policy, report);
}

} // namespace sdm

#endif
