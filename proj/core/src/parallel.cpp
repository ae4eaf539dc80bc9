#include "chordlab/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace chordlab {
namespace {

int pool_size_from_env() {
    if (const char* env = std::getenv("CHORDLAB_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(hw == 0 ? 1 : (hw > 8 ? 8 : hw));
}

// Minimal fork-join pool. One outstanding range task at a time; the
// submitting thread works too, so a pool of N serves N+1 lanes.
class Pool {
public:
    Pool() : workers_(pool_size_from_env() - 1) {
        for (int i = 0; i < static_cast<int>(workers_.size()); ++i)
            workers_[i] = std::thread([this] { worker_loop(); });
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    int lanes() const { return static_cast<int>(workers_.size()) + 1; }

    // One range task at a time; concurrent callers (parallel folds/trials)
    // execute inline instead of queueing.
    bool try_run(std::int64_t n, std::int64_t chunk,
                 const std::function<void(std::int64_t, std::int64_t)>& fn) {
        if (busy_.exchange(true, std::memory_order_acquire)) return false;
        {
            std::lock_guard<std::mutex> lk(mu_);
            fn_ = &fn;
            total_ = n;
            chunk_ = chunk;
            next_.store(0, std::memory_order_relaxed);
            pending_ = static_cast<int>(workers_.size());
            ++epoch_;
        }
        cv_.notify_all();
        drain();
        {
            std::unique_lock<std::mutex> lk(mu_);
            done_cv_.wait(lk, [this] { return pending_ == 0; });
            fn_ = nullptr;
        }
        busy_.store(false, std::memory_order_release);
        return true;
    }

private:
    void drain() {
        for (;;) {
            const std::int64_t begin = next_.fetch_add(chunk_, std::memory_order_relaxed);
            if (begin >= total_) break;
            const std::int64_t end = begin + chunk_ < total_ ? begin + chunk_ : total_;
            (*fn_)(begin, end);
        }
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(std::int64_t, std::int64_t)>* fn = nullptr;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [&] { return stop_ || epoch_ != seen; });
                if (stop_) return;
                seen = epoch_;
                fn = fn_;
            }
            if (fn) {
                for (;;) {
                    const std::int64_t begin = next_.fetch_add(chunk_, std::memory_order_relaxed);
                    if (begin >= total_) break;
                    const std::int64_t end = begin + chunk_ < total_ ? begin + chunk_ : total_;
                    (*fn)(begin, end);
                }
            }
            {
                std::lock_guard<std::mutex> lk(mu_);
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::vector<std::thread> workers_;
    std::atomic<bool> busy_{false};
    std::mutex mu_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(std::int64_t, std::int64_t)>* fn_ = nullptr;
    std::atomic<std::int64_t> next_{0};
    std::int64_t total_ = 0, chunk_ = 1;
    std::uint64_t epoch_ = 0;
    int pending_ = 0;
    bool stop_ = false;
};

Pool& pool() {
    static Pool p;
    return p;
}

}  // namespace

void parallel_for(std::int64_t n, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    if (grain < 1) grain = 1;
    Pool& p = pool();
    if (n <= grain || p.lanes() == 1) {
        fn(0, n);
        return;
    }
    std::int64_t chunk = (n + p.lanes() * 4 - 1) / (p.lanes() * 4);
    if (chunk < grain) chunk = grain;
    if (!p.try_run(n, chunk, fn)) fn(0, n);
}

int parallel_workers() { return pool().lanes(); }

}  // namespace chordlab
