#include "smds/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace smds {

namespace {

// Persistent pool; the calling thread participates in every job.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t workers) {
        for (std::size_t i = 0; i + 1 < workers; ++i) threads_.emplace_back([this] { loop(); });
    }

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    std::size_t size() const { return threads_.size() + 1; }

    void run(std::size_t count, const std::function<void(std::size_t)>& fn) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            fn_ = &fn;
            count_ = count;
            next_.store(0);
            active_ = threads_.size();
            error_ = nullptr;
            ++generation_;
        }
        cv_.notify_all();
        work();
        std::unique_lock<std::mutex> lock(mutex_);
        done_cv_.wait(lock, [this] { return active_ == 0; });
        fn_ = nullptr;
        if (error_) std::rethrow_exception(error_);
    }

private:
    void work() {
        for (;;) {
            const std::size_t i = next_.fetch_add(1);
            if (i >= count_) break;
            try {
                (*fn_)(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mutex_);
                if (!error_) error_ = std::current_exception();
            }
        }
    }

    void loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lock(mutex_);
                cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            work();
            {
                std::lock_guard<std::mutex> lock(mutex_);
                --active_;
            }
            done_cv_.notify_one();
        }
    }

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t)>* fn_ = nullptr;
    std::size_t count_ = 0;
    std::atomic<std::size_t> next_{0};
    std::size_t active_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
};

std::mutex pool_mutex;
std::unique_ptr<ThreadPool> pool;
std::size_t requested_workers = 1;
thread_local bool inside_job = false;

}  // namespace

void set_worker_count(std::size_t workers) {
    std::lock_guard<std::mutex> lock(pool_mutex);
    requested_workers = workers == 0 ? 1 : workers;
    pool.reset();
}

std::size_t worker_count() {
    std::lock_guard<std::mutex> lock(pool_mutex);
    return requested_workers;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (inside_job) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::unique_lock<std::mutex> lock(pool_mutex);
    if (requested_workers <= 1 || count <= 1) {
        lock.unlock();
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    if (!pool) pool = std::make_unique<ThreadPool>(requested_workers);
    // Nested calls run inline; concurrent top-level calls serialize on the lock.
    const std::function<void(std::size_t)> guarded = [&fn](std::size_t i) {
        inside_job = true;
        try {
            fn(i);
        } catch (...) {
            inside_job = false;
            throw;
        }
        inside_job = false;
    };
    pool->run(count, guarded);
}

}  // namespace smds
