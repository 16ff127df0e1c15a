#pragma once

// In-process coupling between a coordinator and its agents: immutable
// messages, barrier-synchronized rounds executed on a worker pool, and
// per-event wall-clock traces.

#include "mies/bids.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace mies::runtime {

struct PriceBroadcast {
  std::vector<double> price;
  std::vector<double> imbalance;
  double rho = 0.0;
};

struct DispatchReport {
  std::vector<double> series;
};

struct BidSubmission {
  BidCurve curve;
};

struct ClearingNotice {
  int hour = 0;
  double price = 0.0;
  double accepted = 0.0;  // MW cleared for the receiving prosumer
};

/// A forecast request to a satellite; the empty payload of a plain round.
struct Tick {
  int hour = 0;
};

using Payload = std::variant<Tick, PriceBroadcast, DispatchReport, BidSubmission, ClearingNotice>;

/// Approximate serialized size in bytes.
std::size_t payload_size(const Payload& p);

struct Envelope {
  std::string sender;
  int round = 0;
  std::shared_ptr<const Payload> payload;

  template <class T>
  const T& as() const {
    return std::get<T>(*payload);
  }
};

template <class T>
Envelope make_envelope(std::string sender, int round, T value) {
  return {std::move(sender), round, std::make_shared<const Payload>(std::move(value))};
}

/// Fixed set of threads running index-parallel jobs. The calling thread
/// takes part, so a pool of size 1 spawns no threads.
class WorkerPool {
public:
  explicit WorkerPool(int threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return static_cast<int>(helpers_.size()) + 1; }

  /// Calls fn(i) for i in [0, n) and returns when all calls have finished.
  /// fn must not throw.
  void parallel_for(int n, const std::function<void(int)>& fn);

private:
  void helper_loop();
  void drain();

  std::vector<std::thread> helpers_;
  std::mutex mutex_;
  std::condition_variable wake_, done_;
  const std::function<void(int)>* job_ = nullptr;
  int job_size_ = 0;
  int next_ = 0;
  int pending_ = 0;
  long generation_ = 0;
  bool stop_ = false;
};

/// Hardware parallelism, at least 1.
int default_threads();

struct PhaseEvent {
  std::string agent;
  int round = 0;
  std::string phase;
  double start = 0.0;  // seconds since the trace origin
  double end = 0.0;
  std::string input_sender;  // provenance of the payload the agent received
  std::size_t bytes_in = 0;
  std::size_t bytes_out = 0;
};

class EventTrace {
public:
  EventTrace() : origin_(std::chrono::steady_clock::now()) {}

  double now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }
  void add(PhaseEvent e) { events_.push_back(std::move(e)); }
  const std::vector<PhaseEvent>& events() const { return events_; }
  bool empty() const { return events_.empty(); }

private:
  std::chrono::steady_clock::time_point origin_;
  std::vector<PhaseEvent> events_;
};

/// An agent's computation failed; the round was aborted.
class AgentFailure : public std::runtime_error {
public:
  AgentFailure(std::string agent, int round, const std::string& what)
      : std::runtime_error("agent " + agent + " failed in round " + std::to_string(round) + ": " + what),
        agent_(std::move(agent)),
        round_(round) {}
  const std::string& agent() const { return agent_; }
  int round() const { return round_; }

private:
  std::string agent_;
  int round_;
};

/// Agent computation: receives its index and the broadcast, returns its report.
using AgentWork = std::function<Payload(int agent, const Envelope& broadcast)>;

class Coordinator {
public:
  explicit Coordinator(int threads = default_threads()) : pool_(threads) {}

  int threads() const { return pool_.size(); }

  /// Sends one payload to every agent, runs all computations concurrently and
  /// returns their reports in agent order. Throws AgentFailure naming the
  /// first failing agent (in agent order).
  std::vector<Envelope> execute_round(const std::string& phase, const Payload& payload,
                                      const std::vector<std::string>& agents, const AgentWork& work);

  /// Individual messages per agent, same semantics otherwise.
  std::vector<Envelope> execute_round(const std::string& phase, const std::vector<Payload>& payloads,
                                      const std::vector<std::string>& agents, const AgentWork& work);

  /// Times coordinator-side work (clearing, residuals) into the trace.
  template <class F>
  auto timed(const std::string& phase, F&& f) {
    const double start = trace_.now();
    struct Record {
      Coordinator* self;
      std::string phase;
      double start;
      ~Record() { self->trace_.add({"coordinator", self->round_, phase, start, self->trace_.now(), "", 0, 0}); }
    } record{this, phase, start};
    return f();
  }

  int round() const { return round_; }
  const EventTrace& trace() const { return trace_; }

private:
  std::vector<Envelope> run(const std::string& phase, std::vector<Envelope> inbox,
                            const std::vector<std::string>& agents, const AgentWork& work);

  WorkerPool pool_;
  EventTrace trace_;
  int round_ = 0;
};

struct RoundProfile {
  int round = 0;
  std::string phase;
  double critical_path = 0.0;  // elapsed time from first start to last end
  std::string slowest_agent;
  double slowest = 0.0;
  double busy = 0.0;  // summed agent compute time
  int agents = 0;
};

struct AgentProfile {
  std::string agent;
  double busy = 0.0;
  double idle = 0.0;  // time inside the agent's rounds not spent computing
  int rounds = 0;
};

struct ProfileSummary {
  std::vector<RoundProfile> rounds;
  std::vector<AgentProfile> agents;  // sorted by id
  std::string slowest_agent;         // largest total busy time
  double critical_path = 0.0;        // sum over rounds
  double coordinator = 0.0;          // coordinator-side time
  double busy = 0.0;
  double idle = 0.0;
};

/// Throws std::invalid_argument on an empty trace.
ProfileSummary profile_report(const EventTrace& trace);

/// Writes `<stem>.csv` (one line per round) and `<stem>_agents.csv`.
void write_profile_csv(const ProfileSummary& summary, const std::filesystem::path& file);

}  // namespace mies::runtime
