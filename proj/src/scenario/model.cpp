#include "mies/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

namespace mies {

namespace {

constexpr std::pair<Carrier, std::string_view> kCarrierNames[] = {
    {Carrier::electricity, "electricity"}, {Carrier::heat, "heat"},
    {Carrier::hydrogen, "hydrogen"},       {Carrier::methane, "methane"},
    {Carrier::biomass, "biomass"},         {Carrier::oil, "oil"},
    {Carrier::transport, "transport"},
};

// Heat pumps deliver more heat than the electricity they draw.
constexpr double kMaxCop = 10.0;

class Checker {
public:
  explicit Checker(ValidationReport& out) : out_(out) {}

  void fail(const std::string& subject, const std::string& message) {
    out_.push_back({subject, message});
  }

  void series(const std::string& subject, const std::string& name, const Series& s, int horizon,
              bool non_negative) {
    if (static_cast<int>(s.size()) != horizon) {
      fail(subject, name + ": timeseries length mismatch (" + std::to_string(s.size()) +
                        " values, horizon " + std::to_string(horizon) + ")");
      return;
    }
    for (int t = 0; t < horizon; ++t) {
      if (!std::isfinite(s[t])) {
        fail(subject, name + "(" + std::to_string(t) + ") is not finite");
        return;
      }
      if (non_negative && s[t] < 0.0) {
        fail(subject, name + "(" + std::to_string(t) + ") is negative");
        return;
      }
    }
  }

private:
  ValidationReport& out_;
};

bool efficiency_ok(double e, double upper) { return std::isfinite(e) && e > 0.0 && e <= upper; }

std::string num(double v) {
  std::string s = std::to_string(v);
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

void check_converter(Checker& check, const Scenario& s, const std::string& subject,
                     const ConverterSpec& c) {
  if (!(c.capacity > 0.0) || !std::isfinite(c.capacity)) check.fail(subject, "capacity must be > 0");
  if (c.input == c.output) check.fail(subject, "input and output carrier coincide");
  if (c.input != Carrier::electricity) {
    if (!s.carrier_prices.count(c.input)) {
      check.fail(subject, "input carrier " + std::string(to_string(c.input)) +
                              " has no price series");
    }
  }
  if (c.is_x2p()) {
    if (c.input == Carrier::electricity || c.uses_electricity) {
      check.fail(subject, "X2P converter cannot take electricity as input");
    }
    if (!efficiency_ok(c.eff_electric, 1.0)) check.fail(subject, "eff_electric must lie in (0, 1]");
    if (c.produces_heat && !efficiency_ok(c.eff_other, 1.0)) {
      check.fail(subject, "eff_other must lie in (0, 1] for a heat-producing X2P converter");
    }
    return;
  }
  if (!is_local_carrier(c.output)) {
    check.fail(subject, "output must be electricity, heat or hydrogen");
  }
  if (c.produces_heat) check.fail(subject, "produces_heat applies to X2P converters only");
  if (c.uses_electricity != (c.input == Carrier::electricity)) {
    check.fail(subject, "uses_electricity must be set exactly when the input is electricity");
  }
  const double upper = c.uses_electricity && c.output == Carrier::heat ? kMaxCop : 1.0;
  if (!efficiency_ok(c.eff_other, upper)) {
    check.fail(subject, "eff_other must lie in (0, " + num(upper) + "]");
  }
}

}  // namespace

std::string_view to_string(Carrier c) {
  for (const auto& [carrier, name] : kCarrierNames) {
    if (carrier == c) return name;
  }
  return "unknown";
}

std::optional<Carrier> parse_carrier(std::string_view name) {
  for (const auto& [carrier, text] : kCarrierNames) {
    if (text == name) return carrier;
  }
  return std::nullopt;
}

const StorageSpec* ProsumerSpec::storage_for(Carrier c) const {
  for (const auto& st : storages) {
    if (st.carrier == c) return &st;
  }
  return nullptr;
}

bool ProsumerSpec::uses_local(Carrier c) const {
  if (c == Carrier::heat && !solar_thermal_max.empty()) return true;
  for (const auto& cv : converters) {
    if (cv.other_output() == c) return true;
  }
  for (const auto& st : storages) {
    if (st.carrier == c) return true;
  }
  for (const auto& d : demands) {
    if (d.carrier == c) return true;
  }
  return false;
}

bool Scenario::has_carrier(Carrier c) const {
  return std::find(carriers.begin(), carriers.end(), c) != carriers.end();
}

double Scenario::price(Carrier c, int hour) const {
  const auto it = carrier_prices.find(c);
  if (it == carrier_prices.end()) return 0.0;
  return it->second.at(hour);
}

std::string to_string(const Violation& v) { return v.subject + ": " + v.message; }

ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport report;
  Checker check(report);
  const int T = s.horizon;
  if (T < 1) {
    check.fail("meta", "horizon must be >= 1");
    return report;
  }
  if (!(s.ceiling_price > 0.0) || !std::isfinite(s.ceiling_price)) {
    check.fail("meta", "ceiling_price must be a positive number");
  }
  if (!s.has_carrier(Carrier::electricity)) check.fail("carriers", "electricity must be listed");
  std::set<Carrier> unique_carriers(s.carriers.begin(), s.carriers.end());
  if (unique_carriers.size() != s.carriers.size()) check.fail("carriers", "duplicate carrier");

  for (const auto& [carrier, series] : s.carrier_prices) {
    const std::string subject = "carrier_prices." + std::string(to_string(carrier));
    if (carrier == Carrier::electricity) check.fail(subject, "electricity is priced by the market");
    if (!s.has_carrier(carrier)) check.fail(subject, "carrier is not listed in carriers");
    check.series(subject, "price", series, T, false);
  }
  for (Carrier c : s.carriers) {
    if (c != Carrier::electricity && !is_local_carrier(c) && !s.carrier_prices.count(c)) {
      check.fail("carriers", std::string(to_string(c)) +
                                 " is neither local nor externally priced");
    }
  }

  if (s.generators.empty()) check.fail("generators", "at least one generator is required");
  std::set<std::string> agent_ids;
  for (const auto& g : s.generators) {
    const std::string subject = "generator " + g.id;
    if (g.id.empty()) check.fail(subject, "missing id");
    if (!agent_ids.insert(g.id).second) check.fail(subject, "duplicate agent id");
    if (!(g.alpha >= 0.0) || !std::isfinite(g.alpha)) check.fail(subject, "alpha must be >= 0");
    if (!std::isfinite(g.beta)) check.fail(subject, "beta must be finite");
    check.series(subject, "g_min", g.g_min, T, true);
    check.series(subject, "g_max", g.g_max, T, true);
    if (static_cast<int>(g.g_min.size()) == T && static_cast<int>(g.g_max.size()) == T) {
      for (int t = 0; t < T; ++t) {
        if (g.g_min[t] > g.g_max[t]) {
          check.fail(subject, "g_min(" + std::to_string(t) + ") > g_max(" + std::to_string(t) + ")");
          break;
        }
      }
    }
  }

  for (const auto& p : s.prosumers) {
    const std::string subject = "prosumer " + p.id;
    if (p.id.empty()) check.fail(subject, "missing id");
    if (!agent_ids.insert(p.id).second) check.fail(subject, "duplicate agent id");
    std::set<std::string> asset_ids;
    auto asset = [&](const std::string& id) {
      if (id.empty()) check.fail(subject, "asset without id");
      if (!asset_ids.insert(id).second) check.fail(subject, "duplicate asset id " + id);
    };
    auto listed = [&](Carrier c, const std::string& where) {
      if (!s.has_carrier(c)) {
        check.fail(subject, where + " references unlisted carrier " + std::string(to_string(c)));
      }
    };

    for (const auto& c : p.converters) {
      asset(c.id);
      listed(c.input, "converter " + c.id);
      listed(c.output, "converter " + c.id);
      if (c.produces_heat) listed(Carrier::heat, "converter " + c.id);
      check_converter(check, s, subject + " converter " + c.id, c);
    }

    std::set<Carrier> storage_carriers;
    for (const auto& st : p.storages) {
      asset(st.id);
      listed(st.carrier, "storage " + st.id);
      const std::string sub = subject + " storage " + st.id;
      if (!is_balanced_carrier(st.carrier)) check.fail(sub, "carrier must be electricity, heat or hydrogen");
      if (!storage_carriers.insert(st.carrier).second) {
        check.fail(sub, "more than one storage for carrier " + std::string(to_string(st.carrier)));
      }
      if (!(st.power_cap > 0.0) || !std::isfinite(st.power_cap)) check.fail(sub, "power_cap must be > 0");
      if (!std::isfinite(st.e_min) || !std::isfinite(st.e_max) || st.e_min > st.e_max) {
        check.fail(sub, "e_min must not exceed e_max");
      }
      if (!(st.initial_energy >= st.e_min && st.initial_energy <= st.e_max)) {
        check.fail(sub, "initial_energy " + num(st.initial_energy) + " outside [" + num(st.e_min) +
                            ", " + num(st.e_max) + "]");
      }
      if (!efficiency_ok(st.eff_charge, 1.0) || !efficiency_ok(st.eff_discharge, 1.0)) {
        check.fail(sub, "efficiencies must lie in (0, 1]");
      }
    }

    for (const auto& d : p.demands) {
      asset(d.id);
      listed(d.carrier, "demand " + d.id);
      const std::string sub = subject + " demand " + d.id;
      if (!is_balanced_carrier(d.carrier)) check.fail(sub, "carrier must be electricity, heat or hydrogen");
      check.series(sub, "base", d.base, T, true);
      if (d.flex_min.empty() != d.flex_max.empty()) {
        check.fail(sub, "flex_min and flex_max must be given together");
        continue;
      }
      if (!d.flexible()) {
        if (d.flex_total != 0.0) check.fail(sub, "flex_total requires a flexible envelope");
        continue;
      }
      check.series(sub, "flex_min", d.flex_min, T, false);
      check.series(sub, "flex_max", d.flex_max, T, false);
      if (static_cast<int>(d.flex_min.size()) != T || static_cast<int>(d.flex_max.size()) != T) continue;
      for (int t = 0; t < T; ++t) {
        if (d.flex_min[t] > d.flex_max[t]) {
          check.fail(sub, "flex_min(" + std::to_string(t) + ") > flex_max(" + std::to_string(t) + ")");
          break;
        }
      }
      if (!std::isfinite(d.flex_total) || d.flex_total < d.flex_min[T - 1] ||
          d.flex_total > d.flex_max[T - 1]) {
        check.fail(sub, "flex_total " + num(d.flex_total) + " outside the final envelope");
      }
    }

    if (!p.solar_thermal_max.empty()) {
      listed(Carrier::heat, "solar thermal");
      check.series(subject, "solar_thermal_max", p.solar_thermal_max, T, true);
    }
  }

  // Feasibility screen: generation must cover the inflexible electric load.
  bool shapes_ok = true;
  for (const auto& g : s.generators) shapes_ok &= static_cast<int>(g.g_max.size()) == T;
  for (const auto& p : s.prosumers) {
    for (const auto& d : p.demands) shapes_ok &= static_cast<int>(d.base.size()) == T;
  }
  if (shapes_ok && !s.generators.empty()) {
    for (int t = 0; t < T; ++t) {
      double capacity = 0.0, load = 0.0;
      for (const auto& g : s.generators) capacity += g.g_max[t];
      for (const auto& p : s.prosumers) {
        for (const auto& d : p.demands) {
          if (d.carrier == Carrier::electricity) load += d.base[t];
        }
      }
      if (load > capacity + 1e-9) {
        check.fail("feasibility", "inflexible electric demand " + num(load) + " MW exceeds generation capacity " +
                                      num(capacity) + " MW at t=" + std::to_string(t));
        break;
      }
    }
  }
  return report;
}

namespace {

class Fnv1a {
public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ull;
    }
  }
  void value(double v) { bytes(&v, sizeof v); }
  void value(int v) { bytes(&v, sizeof v); }
  void value(bool v) { value(static_cast<int>(v)); }
  void value(Carrier c) { value(static_cast<int>(c)); }
  void value(const std::string& s) {
    value(static_cast<int>(s.size()));
    bytes(s.data(), s.size());
  }
  void value(const Series& s) {
    value(static_cast<int>(s.size()));
    if (!s.empty()) bytes(s.data(), s.size() * sizeof(double));
  }
  std::uint64_t digest() const { return h_; }

private:
  std::uint64_t h_ = 14695981039346656037ull;
};

}  // namespace

std::uint64_t scenario_hash(const Scenario& s) {
  Fnv1a h;
  h.value(s.horizon);
  h.value(s.ceiling_price);
  for (Carrier c : s.carriers) h.value(c);
  for (const auto& [c, series] : s.carrier_prices) {
    h.value(c);
    h.value(series);
  }
  for (const auto& g : s.generators) {
    h.value(g.id);
    h.value(g.alpha);
    h.value(g.beta);
    h.value(g.g_min);
    h.value(g.g_max);
  }
  for (const auto& p : s.prosumers) {
    h.value(p.id);
    for (const auto& c : p.converters) {
      h.value(c.id);
      h.value(c.input);
      h.value(c.output);
      h.value(c.eff_electric);
      h.value(c.eff_other);
      h.value(c.capacity);
      h.value(c.uses_electricity);
      h.value(c.produces_heat);
    }
    for (const auto& st : p.storages) {
      h.value(st.id);
      h.value(st.carrier);
      h.value(st.power_cap);
      h.value(st.e_min);
      h.value(st.e_max);
      h.value(st.eff_charge);
      h.value(st.eff_discharge);
      h.value(st.initial_energy);
    }
    for (const auto& d : p.demands) {
      h.value(d.id);
      h.value(d.carrier);
      h.value(d.base);
      h.value(d.flex_min);
      h.value(d.flex_max);
      h.value(d.flex_total);
    }
    h.value(p.solar_thermal_max);
  }
  return h.digest();
}

}  // namespace mies
