#include "tpflow/parallel.hpp"

#include <algorithm>

namespace tpflow {

Backend::Backend(BackendConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.kind == BackendConfig::Kind::DataParallel && cfg_.lanes > 1) {
        workers_.reserve(cfg_.lanes - 1);
        for (int i = 0; i < cfg_.lanes - 1; ++i)
            workers_.emplace_back([this] { worker_loop(); });
    }
}

Backend::~Backend() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        stop_ = true;
    }
    cv_job_.notify_all();
    for (auto& t : workers_) t.join();
}

void Backend::worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
        const std::function<void(std::size_t)>* job;
        std::size_t chunks;
        {
            std::unique_lock<std::mutex> lock(mu_);
            cv_job_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            job = job_;
            chunks = job_chunks_;
            ++active_;
        }
        std::exception_ptr err;
        for (;;) {
            std::size_t c = next_chunk_.fetch_add(1);
            if (c >= chunks) break;
            try {
                (*job)(c);
            } catch (...) {
                if (!err) err = std::current_exception();
            }
        }
        {
            std::lock_guard<std::mutex> lock(mu_);
            if (err && !first_error_) first_error_ = err;
            if (--active_ == 0 && next_chunk_.load() >= chunks) cv_done_.notify_all();
        }
    }
}

void Backend::run_chunked(std::size_t n_chunks, const std::function<void(std::size_t)>& chunk_fn) {
    if (n_chunks == 0) return;
    if (workers_.empty()) {
        for (std::size_t c = 0; c < n_chunks; ++c) chunk_fn(c);
        return;
    }
    {
        std::lock_guard<std::mutex> lock(mu_);
        job_ = &chunk_fn;
        job_chunks_ = n_chunks;
        next_chunk_.store(0);
        first_error_ = nullptr;
        ++generation_;
    }
    cv_job_.notify_all();
    // The dispatching thread works too.
    std::exception_ptr err;
    for (;;) {
        std::size_t c = next_chunk_.fetch_add(1);
        if (c >= n_chunks) break;
        try {
            chunk_fn(c);
        } catch (...) {
            if (!err) err = std::current_exception();
        }
    }
    std::unique_lock<std::mutex> lock(mu_);
    cv_done_.wait(lock, [&] { return active_ == 0; });
    if (err && !first_error_) first_error_ = err;
    if (first_error_) {
        auto e = first_error_;
        first_error_ = nullptr;
        lock.unlock();
        std::rethrow_exception(e);
    }
}

void Backend::parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t chunk = static_cast<std::size_t>(cfg_.chunk);
    if (cfg_.kind == BackendConfig::Kind::Serial) {
        fn(0, n);
        return;
    }
    std::size_t n_chunks = (n + chunk - 1) / chunk;
    run_chunked(n_chunks, [&](std::size_t c) {
        std::size_t b = c * chunk;
        std::size_t e = std::min(b + chunk, n);
        fn(b, e);
    });
}

double Backend::reduce_max(std::span<const double> values) {
    if (values.empty()) throw NumericsError("reduce_max: empty input");
    std::size_t n = values.size();
    std::size_t chunk = static_cast<std::size_t>(cfg_.chunk);
    if (cfg_.kind == BackendConfig::Kind::Serial) {
        double m = values[0];
        for (std::size_t i = 1; i < n; ++i) m = std::max(m, values[i]);
        return m;
    }
    std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<double> partial(n_chunks);
    run_chunked(n_chunks, [&](std::size_t c) {
        std::size_t b = c * chunk;
        std::size_t e = std::min(b + chunk, n);
        double m = values[b];
        for (std::size_t i = b + 1; i < e; ++i) m = std::max(m, values[i]);
        partial[c] = m;
    });
    // Final pass in chunk-index order; shape is fixed by n and chunk
    // only, never by the lane count.
    double m = partial[0];
    for (std::size_t c = 1; c < n_chunks; ++c) m = std::max(m, partial[c]);
    return m;
}

} // namespace tpflow
