#include "sdm/runtime.hpp"

#include <sstream>

namespace sdm {

void throw_error(ErrorKind kind, const std::string& what) {
    switch (kind) {
        case ErrorKind::Validation: throw ValidationError(what);
        case ErrorKind::Conflict: throw ConflictError(what);
        case ErrorKind::NotFound: throw NotFoundError(what);
        case ErrorKind::Lifecycle: throw LifecycleError(what);
        case ErrorKind::State: throw StateError(what);
        case ErrorKind::Bounds: throw BoundsError(what);
        case ErrorKind::Io: throw IoError(what);
        case ErrorKind::CatalogCorrupt: throw CatalogCorruptError(what);
        case ErrorKind::HistoryCorrupt: throw HistoryCorruptError(what);
        case ErrorKind::Collective: throw CollectiveError(what);
        case ErrorKind::Usage: throw UsageError(what);
        case ErrorKind::VerifyMismatch: throw VerifyMismatchError(what);
        case ErrorKind::None:
        case ErrorKind::Internal: break;
    }
    throw Error(ErrorKind::Internal, what);
}

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::None: return "none";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Conflict: return "conflict";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::Lifecycle: return "lifecycle";
        case ErrorKind::State: return "state";
        case ErrorKind::Bounds: return "bounds";
        case ErrorKind::Io: return "io";
        case ErrorKind::CatalogCorrupt: return "catalog-corrupt";
        case ErrorKind::HistoryCorrupt: return "history-corrupt";
        case ErrorKind::Collective: return "collective";
        case ErrorKind::Usage: return "usage";
        case ErrorKind::VerifyMismatch: return "verify-mismatch";
        case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

namespace detail {

namespace {

const char* op_name(JobState::Op op) {
    switch (op) {
        case JobState::Op::None: return "none";
        case JobState::Op::Barrier: return "barrier";
        case JobState::Op::Ring: return "ring-shift";
        case JobState::Op::Bcast: return "broadcast";
        case JobState::Op::Gather: return "gather";
    }
    return "unknown";
}

} // namespace

JobState::JobState(int nprocs, ExecPolicy policy)
    : nprocs_(nprocs),
      policy_(policy),
      in_(static_cast<std::size_t>(nprocs)),
      out_(static_cast<std::size_t>(nprocs)),
      gathered_(static_cast<std::size_t>(nprocs)),
      ls_(static_cast<std::size_t>(nprocs), LsState::Ready) {}

Bytes JobState::exchange(int rank, Op op, int root, Bytes payload,
                         std::vector<Bytes>* gather_out) {
    if ((op == Op::Bcast || op == Op::Gather) && (root < 0 || root >= nprocs_))
        throw ValidationError("collective root out of range");

    std::unique_lock<std::mutex> lk(m_);
    if (failed_) throw_failure_locked();

    if (arrived_ == 0) {
        op_ = op;
        op_root_ = root;
    } else if (op_ != op || op_root_ != root) {
        std::ostringstream os;
        os << "collective mismatch: rank " << rank << " entered " << op_name(op)
           << " while the pending collective is " << op_name(op_);
        fail_locked(rank, ErrorKind::Collective, os.str());
        throw_failure_locked();
    }

    in_[static_cast<std::size_t>(rank)] = std::move(payload);
    ++arrived_;
    const std::uint64_t my_gen = gen_;

    if (arrived_ == nprocs_) {
        complete_locked();
        if (policy_ == ExecPolicy::Lockstep) {
            for (int r = 0; r < nprocs_; ++r)
                if (r != rank && ls_[static_cast<std::size_t>(r)] == LsState::Blocked)
                    ls_[static_cast<std::size_t>(r)] = LsState::Ready;
        }
        cv_.notify_all();
    } else {
        check_deadlock_locked();
        if (failed_) throw_failure_locked();
        if (policy_ == ExecPolicy::Lockstep) ls_yield(rank, LsState::Blocked);
        cv_.wait(lk, [&] { return gen_ != my_gen || failed_; });
        if (gen_ == my_gen) throw_failure_locked();
        if (policy_ == ExecPolicy::Lockstep) ls_wait_turn(lk, rank);
    }

    Bytes result = std::move(out_[static_cast<std::size_t>(rank)]);
    if (gather_out && rank == root) {
        gather_out->clear();
        for (auto& g : gathered_) gather_out->push_back(std::move(g));
    }
    return result;
}

void JobState::complete_locked() {
    const auto n = static_cast<std::size_t>(nprocs_);
    switch (op_) {
        case Op::Barrier:
            ++stats_.barriers;
            for (auto& o : out_) o.clear();
            break;
        case Op::Ring:
            ++stats_.ring_shifts;
            for (std::size_t r = 0; r < n; ++r) out_[(r + 1) % n] = std::move(in_[r]);
            break;
        case Op::Bcast:
            ++stats_.broadcasts;
            for (std::size_t r = 0; r < n; ++r)
                out_[r] = in_[static_cast<std::size_t>(op_root_)];
            break;
        case Op::Gather:
            ++stats_.gathers;
            for (std::size_t r = 0; r < n; ++r) gathered_[r] = std::move(in_[r]);
            for (auto& o : out_) o.clear();
            break;
        case Op::None: break;
    }
    for (auto& i : in_) i.clear();
    ++gen_;
    arrived_ = 0;
    op_ = Op::None;
    op_root_ = -1;
}

void JobState::check_deadlock_locked() {
    if (exited_ > 0 && arrived_ > 0 && arrived_ + exited_ == nprocs_) {
        std::ostringstream os;
        os << "deadlock: " << exited_ << " rank(s) exited without entering the pending "
           << op_name(op_) << " that " << arrived_ << " rank(s) are waiting in";
        fail_locked(-1, ErrorKind::Collective, os.str());
    }
}

void JobState::fail_locked(int rank, ErrorKind kind, const std::string& what) {
    if (!failed_) {
        failed_ = true;
        fail_rank_ = rank;
        fail_kind_ = kind;
        fail_what_ = what;
    }
    cv_.notify_all();
}

void JobState::throw_failure_locked() const {
    std::ostringstream os;
    if (fail_rank_ >= 0)
        os << "job failed at rank " << fail_rank_ << ": " << fail_what_;
    else
        os << "job failed: " << fail_what_;
    throw CollectiveError(os.str());
}

void JobState::rank_started(int rank) {
    if (policy_ != ExecPolicy::Lockstep) return;
    std::unique_lock<std::mutex> lk(m_);
    ls_wait_turn(lk, rank);
}

void JobState::rank_exited(int rank) {
    std::unique_lock<std::mutex> lk(m_);
    ++exited_;
    if (policy_ == ExecPolicy::Lockstep) ls_yield(rank, LsState::Done);
    check_deadlock_locked();
    cv_.notify_all();
}

void JobState::rank_failed(int rank, ErrorKind kind, const std::string& what) {
    std::unique_lock<std::mutex> lk(m_);
    if (policy_ == ExecPolicy::Lockstep) ls_yield(rank, LsState::Done);
    fail_locked(rank, kind, what);
}

void JobState::rethrow_if_failed() const {
    std::lock_guard<std::mutex> lk(m_);
    if (!failed_) return;
    std::ostringstream os;
    if (fail_rank_ >= 0) os << "rank " << fail_rank_ << ": ";
    os << fail_what_;
    throw_error(fail_kind_, os.str());
}

JobStats JobState::stats() const {
    std::lock_guard<std::mutex> lk(m_);
    return stats_;
}

void JobState::ls_wait_turn(std::unique_lock<std::mutex>& lk, int rank) {
    cv_.wait(lk, [&] { return turn_ == rank || failed_; });
    if (failed_) throw_failure_locked();
}

void JobState::ls_yield(int rank, LsState st) {
    ls_[static_cast<std::size_t>(rank)] = st;
    if (turn_ == rank) ls_advance_from(rank);
    cv_.notify_all();
}

void JobState::ls_advance_from(int rank) {
    for (int i = 1; i <= nprocs_; ++i) {
        int r = (rank + i) % nprocs_;
        if (ls_[static_cast<std::size_t>(r)] == LsState::Ready) {
            turn_ = r;
            return;
        }
    }
    turn_ = -1;
}

} // namespace detail
} // namespace sdm
