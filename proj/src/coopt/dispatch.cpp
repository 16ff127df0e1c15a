#include "mies/dispatch.hpp"

#include "mies/csv.hpp"

#include <algorithm>
#include <cmath>

namespace mies {

namespace {

void check_shape(const DispatchResult& d, const Scenario& s) {
  const auto T = static_cast<std::size_t>(s.horizon);
  auto bad = [](const std::string& what) {
    throw std::invalid_argument("dispatch does not match scenario: " + what);
  };
  if (d.generation.size() != s.generators.size()) bad("generator count");
  if (d.prosumers.size() != s.prosumers.size()) bad("prosumer count");
  if (d.price.size() != T) bad("price length");
  for (const auto& g : d.generation)
    if (g.size() != T) bad("generation length");
  for (std::size_t j = 0; j < d.prosumers.size(); ++j) {
    const auto& sched = d.prosumers[j];
    if (sched.net_power.size() != T) bad("net power length");
    if (sched.converter_input.size() != s.prosumers[j].converters.size()) bad("converter count");
    for (const auto& x : sched.converter_input)
      if (x.size() != T) bad("converter input length");
  }
}

}  // namespace

double system_cost(const DispatchResult& d, const Scenario& s) {
  check_shape(d, s);
  double cost = 0.0;
  for (std::size_t i = 0; i < s.generators.size(); ++i) {
    const auto& spec = s.generators[i];
    for (double g : d.generation[i]) cost += spec.alpha * g * g + spec.beta * g;
  }
  for (std::size_t j = 0; j < s.prosumers.size(); ++j) {
    const auto& p = s.prosumers[j];
    for (std::size_t c = 0; c < p.converters.size(); ++c) {
      const auto& conv = p.converters[c];
      if (conv.input == Carrier::electricity) continue;
      for (int t = 0; t < s.horizon; ++t) cost += s.price(conv.input, t) * d.prosumers[j].converter_input[c][t];
    }
  }
  return cost;
}

double max_imbalance(const DispatchResult& d) {
  const std::size_t T = d.price.size();
  double worst = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    for (const auto& g : d.generation) sum += g.at(t);
    for (const auto& p : d.prosumers) sum += p.net_power.at(t);
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

DispatchAudit audit_dispatch(const DispatchResult& d, const Scenario& s) {
  check_shape(d, s);
  DispatchAudit out;
  out.balance = max_imbalance(d);
  for (std::size_t j = 0; j < s.prosumers.size(); ++j) {
    const auto& p = s.prosumers[j];
    const PhysicsAudit a = audit_schedule(s, p, initial_state(p), d.prosumers[j]);
    auto& w = out.physics;
    w.net_power = std::max(w.net_power, a.net_power);
    w.local_balance = std::max(w.local_balance, a.local_balance);
    w.storage_dynamics = std::max(w.storage_dynamics, a.storage_dynamics);
    w.envelope = std::max(w.envelope, a.envelope);
    w.flex_total = std::max(w.flex_total, a.flex_total);
    w.simultaneous = std::max(w.simultaneous, a.simultaneous);
  }
  return out;
}

namespace {

// Writes a family of per-hour columns: header "hour,<names...>".
void write_family(const std::filesystem::path& file, const std::vector<std::string>& names,
                  const std::vector<const Series*>& columns, int horizon) {
  CsvWriter w(file);
  std::vector<std::string> header{"hour"};
  header.insert(header.end(), names.begin(), names.end());
  w.row(header);
  for (int t = 0; t < horizon; ++t) {
    std::vector<std::string> fields{std::to_string(t)};
    for (const Series* c : columns) fields.push_back(format_number((*c)[t]));
    w.row(fields);
  }
}

}  // namespace

void write_dispatch_csv(const DispatchResult& d, const Scenario& s, const std::filesystem::path& dir) {
  check_shape(d, s);
  std::filesystem::create_directories(dir);
  const int T = s.horizon;

  write_family(dir / "price.csv", {"price"}, {&d.price}, T);

  std::vector<std::string> names;
  std::vector<const Series*> cols;
  for (std::size_t i = 0; i < s.generators.size(); ++i) {
    names.push_back(s.generators[i].id);
    cols.push_back(&d.generation[i]);
  }
  write_family(dir / "generation.csv", names, cols, T);

  names.clear();
  cols.clear();
  for (std::size_t j = 0; j < s.prosumers.size(); ++j) {
    names.push_back(s.prosumers[j].id);
    cols.push_back(&d.prosumers[j].net_power);
  }
  write_family(dir / "net_power.csv", names, cols, T);

  struct Family {
    const char* file;
    std::vector<std::string> names;
    std::vector<const Series*> cols;
  };
  Family input{"converter_input.csv", {}, {}}, solar{"solar_thermal.csv", {}, {}};
  Family charge{"storage_charge.csv", {}, {}}, discharge{"storage_discharge.csv", {}, {}};
  Family energy{"storage_energy.csv", {}, {}}, flex{"flex_energy.csv", {}, {}};
  for (std::size_t j = 0; j < s.prosumers.size(); ++j) {
    const auto& p = s.prosumers[j];
    const auto& sched = d.prosumers[j];
    for (std::size_t c = 0; c < p.converters.size(); ++c) {
      input.names.push_back(p.id + "." + p.converters[c].id);
      input.cols.push_back(&sched.converter_input[c]);
    }
    if (!sched.solar_thermal.empty()) {
      solar.names.push_back(p.id);
      solar.cols.push_back(&sched.solar_thermal);
    }
    for (std::size_t k = 0; k < p.storages.size(); ++k) {
      const std::string name = p.id + "." + p.storages[k].id;
      charge.names.push_back(name);
      charge.cols.push_back(&sched.charge[k]);
      discharge.names.push_back(name);
      discharge.cols.push_back(&sched.discharge[k]);
      energy.names.push_back(name);
      energy.cols.push_back(&sched.energy[k]);
    }
    for (std::size_t k = 0; k < p.demands.size(); ++k) {
      if (sched.flex_energy.at(k).empty()) continue;
      flex.names.push_back(p.id + "." + p.demands[k].id);
      flex.cols.push_back(&sched.flex_energy[k]);
    }
  }
  for (const Family* f : {&input, &solar, &charge, &discharge, &energy, &flex})
    write_family(dir / f->file, f->names, f->cols, T);

  CsvWriter summary(dir / "summary.csv");
  summary.row({"method", "total_cost", "wall_seconds", "iterations", "solve_count", "converged",
               "primal_residual", "dual_residual", "max_imbalance"});
  const auto& g = d.diagnostics;
  summary.row({d.method, format_number(d.total_cost), format_number(g.wall_seconds),
               std::to_string(g.iterations), std::to_string(g.solve_count), g.converged ? "1" : "0",
               format_number(g.primal_residual), format_number(g.dual_residual),
               format_number(max_imbalance(d))});
}

}  // namespace mies
