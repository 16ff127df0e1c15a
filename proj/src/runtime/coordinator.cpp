#include "mies/runtime.hpp"

#include <exception>

namespace mies::runtime {

std::size_t payload_size(const Payload& p) {
  struct Size {
    std::size_t operator()(const Tick&) const { return sizeof(int); }
    std::size_t operator()(const PriceBroadcast& b) const {
      return (b.price.size() + b.imbalance.size() + 1) * sizeof(double);
    }
    std::size_t operator()(const DispatchReport& r) const { return r.series.size() * sizeof(double); }
    std::size_t operator()(const BidSubmission& b) const {
      return b.curve.prosumer.size() + sizeof(int) + b.curve.blocks.size() * sizeof(BidBlock);
    }
    std::size_t operator()(const ClearingNotice&) const { return sizeof(int) + 2 * sizeof(double); }
  };
  return std::visit(Size{}, p);
}

std::vector<Envelope> Coordinator::execute_round(const std::string& phase, const Payload& payload,
                                                 const std::vector<std::string>& agents,
                                                 const AgentWork& work) {
  const int round = ++round_;
  const Envelope shared{"coordinator", round, std::make_shared<const Payload>(payload)};
  return run(phase, std::vector<Envelope>(agents.size(), shared), agents, work);
}

std::vector<Envelope> Coordinator::execute_round(const std::string& phase, const std::vector<Payload>& payloads,
                                                 const std::vector<std::string>& agents,
                                                 const AgentWork& work) {
  if (payloads.size() != agents.size()) throw std::invalid_argument("one payload per agent required");
  const int round = ++round_;
  std::vector<Envelope> inbox;
  for (const auto& p : payloads) inbox.push_back({"coordinator", round, std::make_shared<const Payload>(p)});
  return run(phase, std::move(inbox), agents, work);
}

std::vector<Envelope> Coordinator::run(const std::string& phase, std::vector<Envelope> inbox,
                                       const std::vector<std::string>& agents, const AgentWork& work) {
  const int round = round_;
  const int n = static_cast<int>(agents.size());
  std::vector<Envelope> reports(n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<PhaseEvent> events(n);
  pool_.parallel_for(n, [&](int i) {
    PhaseEvent& e = events[i];
    e.agent = agents[i];
    e.round = round;
    e.phase = phase;
    e.input_sender = inbox[i].sender;
    e.bytes_in = payload_size(*inbox[i].payload);
    e.start = trace_.now();
    try {
      reports[i] = {agents[i], round, std::make_shared<const Payload>(work(i, inbox[i]))};
      e.bytes_out = payload_size(*reports[i].payload);
    } catch (...) {
      errors[i] = std::current_exception();
    }
    e.end = trace_.now();
  });
  for (auto& e : events) trace_.add(std::move(e));

  for (int i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& ex) {
      throw AgentFailure(agents[i], round, ex.what());
    } catch (...) {
      throw AgentFailure(agents[i], round, "unknown error");
    }
  }
  return reports;
}

}  // namespace mies::runtime
