#include "parseq/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace parseq {

namespace {

std::size_t detect_thread_count() {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("PARSEQ_THREADS")) {
        char* end = nullptr;
        unsigned long cap = std::strtoul(env, &end, 10);
        if (end != env) n = cap >= 1 && cap < n ? cap : (cap == 0 ? 1 : n);
    }
    return n;
}

thread_local bool inside_pool = false;

// Fork-join pool. parallel_for publishes one job at a time; workers and the
// calling thread pull fixed-size chunks through an atomic cursor. run() does
// not return until every participating worker has left the job, so job state
// is never observed stale.
class Pool {
public:
    static Pool& instance() {
        static Pool pool(thread_count());
        return pool;
    }

    void run(std::size_t begin, std::size_t end,
             const std::function<void(std::size_t)>& fn, std::size_t chunk) {
        std::unique_lock<std::mutex> job_guard(job_mutex_);
        {
            std::lock_guard<std::mutex> lk(mutex_);
            fn_ = &fn;
            end_ = end;
            chunk_ = chunk;
            cursor_.store(begin, std::memory_order_relaxed);
            ++generation_;
        }
        wake_.notify_all();
        {
            inside_pool = true;
            work(end, fn, chunk);
            inside_pool = false;
        }
        std::unique_lock<std::mutex> lk(mutex_);
        idle_.wait(lk, [&] { return active_ == 0; });
        fn_ = nullptr;  // late wakers skip the drained job
    }

private:
    explicit Pool(std::size_t threads) {
        for (std::size_t i = 0; i + 1 < threads; ++i) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(mutex_);
            stop_ = true;
        }
        wake_.notify_all();
        for (auto& w : workers_) w.join();
    }

    void worker_loop() {
        inside_pool = true;
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(std::size_t)>* fn = nullptr;
            std::size_t end = 0, chunk = 1;
            {
                std::unique_lock<std::mutex> lk(mutex_);
                wake_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                if (fn_) {
                    fn = fn_;
                    end = end_;
                    chunk = chunk_;
                    ++active_;
                }
            }
            if (!fn) continue;
            work(end, *fn, chunk);
            std::lock_guard<std::mutex> lk(mutex_);
            if (--active_ == 0) idle_.notify_all();
        }
    }

    void work(std::size_t end, const std::function<void(std::size_t)>& fn,
              std::size_t chunk) {
        for (;;) {
            std::size_t lo = cursor_.fetch_add(chunk, std::memory_order_relaxed);
            if (lo >= end) return;
            std::size_t hi = lo + chunk < end ? lo + chunk : end;
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::mutex job_mutex_;
    std::condition_variable wake_;
    std::condition_variable idle_;
    const std::function<void(std::size_t)>* fn_ = nullptr;
    std::size_t end_ = 0, chunk_ = 1;
    std::atomic<std::size_t> cursor_{0};
    std::size_t active_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

}  // namespace

std::size_t thread_count() {
    static const std::size_t n = detect_thread_count();
    return n;
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn, std::size_t grain) {
    if (begin >= end) return;
    const std::size_t n = end - begin;
    if (grain == 0) grain = 1;
    if (inside_pool || thread_count() == 1 || n <= grain) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    // A few chunks per worker so uneven work still balances.
    std::size_t chunk = n / (4 * thread_count());
    if (chunk < grain) chunk = grain;
    Pool::instance().run(begin, end, fn, chunk);
}

}  // namespace parseq
