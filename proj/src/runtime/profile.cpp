#include "mies/runtime.hpp"

#include "mies/csv.hpp"

#include <algorithm>
#include <map>

namespace mies::runtime {

ProfileSummary profile_report(const EventTrace& trace) {
  if (trace.empty()) throw std::invalid_argument("profile of an empty trace");

  struct Span {
    std::string phase;
    double first = 0.0, last = 0.0;
    std::vector<const PhaseEvent*> events;
  };
  std::map<int, Span> rounds;
  ProfileSummary out;
  for (const auto& e : trace.events()) {
    if (e.agent == "coordinator") {
      out.coordinator += e.end - e.start;
      continue;
    }
    auto [it, fresh] = rounds.try_emplace(e.round);
    Span& s = it->second;
    if (fresh) {
      s.phase = e.phase;
      s.first = e.start;
      s.last = e.end;
    }
    s.first = std::min(s.first, e.start);
    s.last = std::max(s.last, e.end);
    s.events.push_back(&e);
  }

  std::map<std::string, AgentProfile> agents;
  for (const auto& [round, s] : rounds) {
    RoundProfile r;
    r.round = round;
    r.phase = s.phase;
    r.critical_path = s.last - s.first;
    r.agents = static_cast<int>(s.events.size());
    for (const PhaseEvent* e : s.events) {
      const double d = e->end - e->start;
      r.busy += d;
      if (d > r.slowest || r.slowest_agent.empty()) {
        r.slowest = d;
        r.slowest_agent = e->agent;
      }
      AgentProfile& a = agents[e->agent];
      a.agent = e->agent;
      a.busy += d;
      a.idle += r.critical_path - d;
      ++a.rounds;
    }
    out.critical_path += r.critical_path;
    out.busy += r.busy;
    out.rounds.push_back(std::move(r));
  }
  for (auto& [id, a] : agents) {
    out.idle += a.idle;
    out.agents.push_back(a);
  }
  const auto slowest = std::max_element(out.agents.begin(), out.agents.end(),
                                        [](const AgentProfile& a, const AgentProfile& b) { return a.busy < b.busy; });
  if (slowest != out.agents.end()) out.slowest_agent = slowest->agent;
  return out;
}

void write_profile_csv(const ProfileSummary& summary, const std::filesystem::path& file) {
  CsvWriter rounds(file);
  rounds.row({"round", "phase", "critical_path_s", "slowest_agent", "slowest_s", "busy_s", "agents"});
  for (const auto& r : summary.rounds)
    rounds.row({std::to_string(r.round), r.phase, format_number(r.critical_path), r.slowest_agent,
                format_number(r.slowest), format_number(r.busy), std::to_string(r.agents)});

  auto agents_file = file;
  agents_file.replace_filename(file.stem().string() + "_agents" + file.extension().string());
  CsvWriter agents(agents_file);
  agents.row({"agent", "busy_s", "idle_s", "rounds"});
  for (const auto& a : summary.agents)
    agents.row({a.agent, format_number(a.busy), format_number(a.idle), std::to_string(a.rounds)});
  agents.row({"coordinator", format_number(summary.coordinator), "0", "0"});
}

}  // namespace mies::runtime
