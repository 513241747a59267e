#include "clit/threading.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

#include "clit/common.hpp"

namespace clit {
namespace {

thread_local bool tl_inside_pool = false;

class Pool {
public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void resize(int n) {
        std::lock_guard<std::mutex> lk(api_mutex_);
        if (n == static_cast<int>(workers_.size()) + 1) return;
        shutdown();
        spawn(n - 1);
        threads_.store(n, std::memory_order_relaxed);
    }

    int threads() const { return threads_.load(std::memory_order_relaxed); }

    void run(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
        // Nested or single-threaded calls run inline, before any locking, so
        // kernels may freely call each other.
        if (tl_inside_pool || threads_.load(std::memory_order_relaxed) <= 1 || n < 2) {
            if (n > 0) fn(0, n);
            return;
        }
        std::lock_guard<std::mutex> lk(api_mutex_);
        const int nw = threads_.load(std::memory_order_relaxed);
        if (nw <= 1) {
            if (n > 0) fn(0, n);
            return;
        }
        const int chunks = static_cast<int>(std::min<int64_t>(nw, n));
        job_ = &fn;
        job_size_ = n;
        job_chunks_ = chunks;
        pending_.store(chunks, std::memory_order_relaxed);
        next_chunk_.store(0, std::memory_order_relaxed);
        {
            std::lock_guard<std::mutex> g(mutex_);
            ++generation_;
        }
        cv_.notify_all();
        // The caller participates as worker 0.
        work();
        std::unique_lock<std::mutex> g(mutex_);
        done_cv_.wait(g, [&] { return pending_.load(std::memory_order_acquire) == 0; });
        job_ = nullptr;
    }

private:
    Pool() = default;
    ~Pool() { shutdown(); }

    void spawn(int extra) {
        stop_ = false;
        for (int i = 0; i < extra; ++i) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    void shutdown() {
        {
            std::lock_guard<std::mutex> g(mutex_);
            stop_ = true;
            ++generation_;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
        workers_.clear();
    }

    void worker_loop() {
        uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> g(mutex_);
                cv_.wait(g, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            work();
        }
    }

    void work() {
        const auto* fn = job_;
        if (!fn) return;
        tl_inside_pool = true;
        const int64_t n = job_size_;
        const int chunks = job_chunks_;
        for (;;) {
            const int c = next_chunk_.fetch_add(1, std::memory_order_relaxed);
            if (c >= chunks) break;
            const int64_t begin = n * c / chunks;
            const int64_t end = n * (c + 1) / chunks;
            if (begin < end) (*fn)(begin, end);
            if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                std::lock_guard<std::mutex> g(mutex_);
                done_cv_.notify_all();
            }
        }
        tl_inside_pool = false;
    }

    std::mutex api_mutex_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> workers_;
    bool stop_ = false;
    uint64_t generation_ = 0;
    std::atomic<int> threads_{1};

    const std::function<void(int64_t, int64_t)>* job_ = nullptr;
    int64_t job_size_ = 0;
    int job_chunks_ = 0;
    std::atomic<int> next_chunk_{0};
    std::atomic<int> pending_{0};
};

}  // namespace

void set_num_threads(int n) {
    check(n >= 1, "set_num_threads: thread count must be >= 1");
    Pool::instance().resize(n);
}

int num_threads() { return Pool::instance().threads(); }

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    Pool::instance().run(n, fn);
}

}  // namespace clit
