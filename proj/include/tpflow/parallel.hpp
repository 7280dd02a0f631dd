#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "tpflow/errors.hpp"

namespace tpflow {

// Execution backend selection. The data-parallel backend runs per-cell
// kernels over fixed-size chunks on a worker pool; chunk boundaries
// depend only on the domain size, so results are identical for every
// lane count.
struct BackendConfig {
    enum class Kind { Serial, DataParallel };
    Kind kind = Kind::Serial;
    int lanes = 1;               // worker parallelism (DataParallel only)
    int chunk = 4096;            // cells per work unit
    bool deterministic_reduction = true;

    static BackendConfig serial() { return {}; }
    static BackendConfig parallel(int lanes, int chunk = 4096) {
        return {Kind::DataParallel, lanes, chunk, true};
    }

    void validate() const {
        if (lanes < 1) throw ConfigError("backend: lanes must be >= 1");
        if (chunk < 1) throw ConfigError("backend: chunk must be >= 1");
    }
};

class Backend {
public:
    explicit Backend(BackendConfig cfg);
    ~Backend();

    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    const BackendConfig& config() const { return cfg_; }

    // Applies fn(begin, end) over [0, n) split into chunks. Kernels must
    // write only their own output slots; exceptions propagate to the
    // caller after all workers drain.
    void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

    // Applies a pure per-index kernel, writing out[i] = kernel(i).
    template <class F>
    void map(std::size_t n, double* out, F&& kernel) {
        parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) out[i] = kernel(i);
        });
    }

    // Exact global maximum via chunk-local maxima followed by a final
    // pass over the chunk results in index order.
    double reduce_max(std::span<const double> values);

private:
    void run_chunked(std::size_t n_chunks, const std::function<void(std::size_t)>& chunk_fn);
    void worker_loop();

    BackendConfig cfg_;
    std::vector<std::thread> workers_;

    std::mutex mu_;
    std::condition_variable cv_job_;
    std::condition_variable cv_done_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t job_chunks_ = 0;
    std::atomic<std::size_t> next_chunk_{0};
    std::size_t active_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
    std::exception_ptr first_error_;
};

} // namespace tpflow
