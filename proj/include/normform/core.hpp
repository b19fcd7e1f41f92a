/*
 Copyright 2026 The normform Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef NORMFORM_CORE_HPP
#define NORMFORM_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <exception>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace normform {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error hierarchy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: blow-ups, divergence, non-finite gradients.
class NumericError : public Error {
public:
    using Error::Error;
};

class IntegrationBlowup : public NumericError {
public:
    IntegrationBlowup(const std::string& what, long time_index, long trajectory = -1)
        : NumericError(what), time_index_(time_index), trajectory_(trajectory) {}

    long time_index() const { return time_index_; }
    /// -1 when the blow-up is not tied to an ensemble member.
    long trajectory() const { return trajectory_; }

private:
    long time_index_;
    long trajectory_;
};

class DatasetError : public Error {
public:
    DatasetError(const std::string& what, double failure_rate = 0.0)
        : Error(what), failure_rate_(failure_rate) {}
    double failure_rate() const { return failure_rate_; }

private:
    double failure_rate_;
};

class RankError : public Error {
public:
    RankError(const std::string& what, long achievable)
        : Error(what), achievable_(achievable) {}
    long achievable_rank() const { return achievable_; }

private:
    long achievable_;
};

class NoOscillationError : public NumericError {
public:
    using NumericError::NumericError;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Deterministic engine from a list of integers (seed, stream, index...).
inline std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    for (auto k : keys) {
        words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

/// Uniform draw on [-1, 1]. Built from raw 53-bit words so results do not
/// depend on the standard library's distribution implementation.
inline double uniform_pm1(std::mt19937_64& rng) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

inline double standard_normal(std::mt19937_64& rng) {
    // Box-Muller, one value per call.
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

/// Worker count from NORMFORM_THREADS (default: hardware concurrency).
inline unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("NORMFORM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    }
    return n;
}

/// Static-partition parallel loop over [0, count). Each index is processed by
/// exactly one worker, so results written per index are deterministic. The
/// first exception thrown (lowest index) is rethrown on the caller's thread.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const unsigned workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace normform

#endif  // NORMFORM_CORE_HPP
