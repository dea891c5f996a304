#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "jitsteer/provider.hpp"

namespace jitsteer {

class WarningLog {
 public:
  void add(std::string warning) {
    std::lock_guard lock(mu_);
    items_.push_back(std::move(warning));
  }
  std::vector<std::string> items() const {
    std::lock_guard lock(mu_);
    return items_;
  }
  bool empty() const {
    std::lock_guard lock(mu_);
    return items_.empty();
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> items_;
};

/// What every pipeline stage needs: the gateway, the job the calls are
/// attributed to, a warning sink, and an optional audit directory.
struct RunContext {
  Gateway* gateway = nullptr;
  std::string job_id;
  std::shared_ptr<WarningLog> warnings = std::make_shared<WarningLog>();
  std::filesystem::path audit_dir;

  CompletionResult complete(CompletionRequest request) const {
    request.job_id = job_id;
    return gateway->complete(request);
  }
  void warn(std::string warning) const { warnings->add(std::move(warning)); }

  /// Worker count for fan-out against one role.
  std::size_t fan_out(ProviderRole role) const {
    return gateway->configured(role) ? static_cast<std::size_t>(gateway->role_config(role).in_flight_cap) : 1;
  }
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown is rethrown after every worker has joined.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (n == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace jitsteer
