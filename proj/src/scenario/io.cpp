// Scenario files: one YAML document plus sibling CSV files holding the
// series, one column per series id and one row per hour.

#include "mies/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace mies {

namespace {

using SeriesTable = std::map<std::string, Series>;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ScenarioError(where + ": not a number: '" + text + "'");
  return value;
}

void read_csv(const std::filesystem::path& path, SeriesTable& table) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open series file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ScenarioError(path.string() + ": empty series file");
  const auto header = split(line);
  std::vector<Series*> columns;
  for (const auto& name : header) {
    if (name.empty()) throw ScenarioError(path.string() + ": empty column name");
    auto [it, inserted] = table.try_emplace(name);
    if (!inserted) throw ScenarioError(path.string() + ": duplicate series id " + name);
    columns.push_back(&it->second);
  }
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != columns.size()) {
      throw ScenarioError(path.string() + ":" + std::to_string(row) + ": expected " +
                          std::to_string(columns.size()) + " columns");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      columns[c]->push_back(parse_double(cells[c], path.string() + ":" + std::to_string(row)));
    }
  }
}

class Reader {
public:
  Reader(const SeriesTable& table, int horizon) : table_(table), horizon_(horizon) {}

  static void only_keys(const YAML::Node& node, const std::string& where,
                        std::initializer_list<std::string_view> allowed) {
    if (!node.IsMap()) throw ScenarioError(where + ": expected a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      bool known = false;
      for (auto a : allowed) known |= a == key;
      if (!known) throw ScenarioError(where + ": unknown key '" + key + "'");
    }
  }

  static double number(const YAML::Node& node, const std::string& key, const std::string& where) {
    if (!node[key]) throw ScenarioError(where + ": missing '" + key + "'");
    try {
      return node[key].as<double>();
    } catch (const YAML::Exception&) {
      throw ScenarioError(where + "." + key + ": expected a number");
    }
  }

  static double number_or(const YAML::Node& node, const std::string& key, double fallback,
                          const std::string& where) {
    return node[key] ? number(node, key, where) : fallback;
  }

  static bool flag(const YAML::Node& node, const std::string& key, const std::string& where) {
    if (!node[key]) return false;
    try {
      return node[key].as<bool>();
    } catch (const YAML::Exception&) {
      throw ScenarioError(where + "." + key + ": expected true or false");
    }
  }

  static std::string text(const YAML::Node& node, const std::string& key, const std::string& where) {
    if (!node[key] || !node[key].IsScalar()) throw ScenarioError(where + ": missing '" + key + "'");
    return node[key].as<std::string>();
  }

  static Carrier carrier(const YAML::Node& node, const std::string& key, const std::string& where) {
    const auto name = text(node, key, where);
    const auto c = parse_carrier(name);
    if (!c) throw ScenarioError(where + "." + key + ": unknown carrier '" + name + "'");
    return *c;
  }

  // A series is either a CSV column id or a number meaning a flat series.
  Series series(const YAML::Node& node, const std::string& key, const std::string& where) const {
    if (!node[key] || !node[key].IsScalar()) throw ScenarioError(where + ": missing '" + key + "'");
    const auto raw = node[key].as<std::string>();
    double flat = 0.0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), flat);
    if (ec == std::errc() && ptr == raw.data() + raw.size()) return Series(horizon_, flat);
    const auto it = table_.find(raw);
    if (it == table_.end()) throw ScenarioError(where + "." + key + ": unknown series '" + raw + "'");
    if (static_cast<int>(it->second.size()) != horizon_) {
      throw ScenarioError(where + "." + key + ": timeseries length mismatch for '" + raw + "' (" +
                          std::to_string(it->second.size()) + " values, horizon " +
                          std::to_string(horizon_) + ")");
    }
    return it->second;
  }

private:
  const SeriesTable& table_;
  int horizon_;
};

GeneratorSpec read_generator(const Reader& r, const YAML::Node& n, const std::string& where) {
  Reader::only_keys(n, where, {"id", "alpha", "beta", "g_min", "g_max"});
  GeneratorSpec g;
  g.id = Reader::text(n, "id", where);
  g.alpha = Reader::number(n, "alpha", where);
  g.beta = Reader::number(n, "beta", where);
  g.g_min = n["g_min"] ? r.series(n, "g_min", where) : Series();
  g.g_max = r.series(n, "g_max", where);
  if (!n["g_min"]) g.g_min.assign(g.g_max.size(), 0.0);
  return g;
}

ConverterSpec read_converter(const YAML::Node& n, const std::string& where) {
  Reader::only_keys(n, where, {"id", "input", "output", "eff_electric", "eff_other", "capacity",
                               "uses_electricity", "produces_heat"});
  ConverterSpec c;
  c.id = Reader::text(n, "id", where);
  c.input = Reader::carrier(n, "input", where);
  c.output = Reader::carrier(n, "output", where);
  c.eff_electric = Reader::number_or(n, "eff_electric", 0.0, where);
  c.eff_other = Reader::number_or(n, "eff_other", 0.0, where);
  c.capacity = Reader::number(n, "capacity", where);
  c.uses_electricity = Reader::flag(n, "uses_electricity", where);
  c.produces_heat = Reader::flag(n, "produces_heat", where);
  return c;
}

StorageSpec read_storage(const YAML::Node& n, const std::string& where) {
  Reader::only_keys(n, where, {"id", "carrier", "power_cap", "e_min", "e_max", "eff_charge",
                               "eff_discharge", "initial_energy"});
  StorageSpec s;
  s.id = Reader::text(n, "id", where);
  s.carrier = Reader::carrier(n, "carrier", where);
  s.power_cap = Reader::number(n, "power_cap", where);
  s.e_min = Reader::number_or(n, "e_min", 0.0, where);
  s.e_max = Reader::number(n, "e_max", where);
  s.eff_charge = Reader::number(n, "eff_charge", where);
  s.eff_discharge = Reader::number(n, "eff_discharge", where);
  s.initial_energy = Reader::number_or(n, "initial_energy", 0.5 * (s.e_min + s.e_max), where);
  return s;
}

DemandSpec read_demand(const Reader& r, const YAML::Node& n, const std::string& where) {
  Reader::only_keys(n, where, {"id", "carrier", "base", "flex_min", "flex_max", "flex_total"});
  DemandSpec d;
  d.id = Reader::text(n, "id", where);
  d.carrier = Reader::carrier(n, "carrier", where);
  d.base = r.series(n, "base", where);
  if (n["flex_min"] || n["flex_max"] || n["flex_total"]) {
    d.flex_min = r.series(n, "flex_min", where);
    d.flex_max = r.series(n, "flex_max", where);
    d.flex_total = Reader::number(n, "flex_total", where);
  }
  return d;
}

ProsumerSpec read_prosumer(const Reader& r, const YAML::Node& n, const std::string& where) {
  Reader::only_keys(n, where, {"id", "converters", "storages", "demands", "solar_thermal_max"});
  ProsumerSpec p;
  p.id = Reader::text(n, "id", where);
  const std::string sub = where + "(" + p.id + ")";
  for (const auto& c : n["converters"]) p.converters.push_back(read_converter(c, sub + ".converters"));
  for (const auto& s : n["storages"]) p.storages.push_back(read_storage(s, sub + ".storages"));
  for (const auto& d : n["demands"]) p.demands.push_back(read_demand(r, d, sub + ".demands"));
  if (n["solar_thermal_max"]) p.solar_thermal_max = r.series(n, "solar_thermal_max", sub);
  return p;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw ScenarioError("cannot open scenario file " + path.string());
  } catch (const YAML::Exception& e) {
    throw ScenarioError("parse error in " + path.string() + ": " + e.what());
  }

  try {
    Reader::only_keys(root, "scenario", {"meta", "carriers", "carrier_prices", "generators", "prosumers"});
    const auto meta = root["meta"];
    if (!meta) throw ScenarioError("scenario: missing 'meta'");
    Reader::only_keys(meta, "meta", {"horizon", "ceiling_price", "series"});

    Scenario s;
    s.horizon = meta["horizon"] ? meta["horizon"].as<int>() : 0;
    if (s.horizon < 1) throw ScenarioError("meta.horizon must be a positive integer");
    s.ceiling_price = Reader::number_or(meta, "ceiling_price", 3000.0, "meta");

    SeriesTable table;
    for (const auto& file : meta["series"]) {
      read_csv(path.parent_path() / file.as<std::string>(), table);
    }
    const Reader r(table, s.horizon);

    for (const auto& c : root["carriers"]) {
      const auto name = c.as<std::string>();
      const auto carrier = parse_carrier(name);
      if (!carrier) throw ScenarioError("carriers: unknown carrier '" + name + "'");
      s.carriers.push_back(*carrier);
    }
    if (const auto prices = root["carrier_prices"]) {
      if (!prices.IsMap()) throw ScenarioError("carrier_prices: expected a mapping");
      for (const auto& kv : prices) {
        const auto name = kv.first.as<std::string>();
        const auto carrier = parse_carrier(name);
        if (!carrier) throw ScenarioError("carrier_prices: unknown carrier '" + name + "'");
        s.carrier_prices[*carrier] = r.series(prices, name, "carrier_prices");
      }
    }
    for (const auto& g : root["generators"]) s.generators.push_back(read_generator(r, g, "generators"));
    for (const auto& p : root["prosumers"]) s.prosumers.push_back(read_prosumer(r, p, "prosumers"));

    const auto report = validate_scenario(s);
    if (!report.empty()) throw ScenarioError("invalid scenario: " + to_string(report.front()));
    return s;
  } catch (const YAML::Exception& e) {
    throw ScenarioError("malformed scenario " + path.string() + ": " + e.what());
  }
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::vector<std::pair<std::string, const Series*>> columns;
  auto column = [&](std::string name, const Series& series) {
    columns.emplace_back(name, &series);
    return name;
  };
  auto number = [](YAML::Emitter& out, const char* key, double v) {
    out << YAML::Key << key << YAML::Value << shortest(v);
  };

  const auto csv_name = path.stem().string() + ".series.csv";
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "meta" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "horizon" << YAML::Value << s.horizon;
  number(out, "ceiling_price", s.ceiling_price);
  out << YAML::Key << "series" << YAML::Value << YAML::Flow << YAML::BeginSeq << csv_name << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "carriers" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Carrier c : s.carriers) out << std::string(to_string(c));
  out << YAML::EndSeq;

  out << YAML::Key << "carrier_prices" << YAML::Value << YAML::BeginMap;
  for (const auto& [c, series] : s.carrier_prices) {
    const std::string name(to_string(c));
    out << YAML::Key << name << YAML::Value << column("price." + name, series);
  }
  out << YAML::EndMap;

  out << YAML::Key << "generators" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : s.generators) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << g.id;
    number(out, "alpha", g.alpha);
    number(out, "beta", g.beta);
    out << YAML::Key << "g_min" << YAML::Value << column(g.id + ".g_min", g.g_min);
    out << YAML::Key << "g_max" << YAML::Value << column(g.id + ".g_max", g.g_max);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "prosumers" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : s.prosumers) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << p.id;
    out << YAML::Key << "converters" << YAML::Value << YAML::BeginSeq;
    for (const auto& c : p.converters) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "id" << YAML::Value << c.id;
      out << YAML::Key << "input" << YAML::Value << std::string(to_string(c.input));
      out << YAML::Key << "output" << YAML::Value << std::string(to_string(c.output));
      number(out, "eff_electric", c.eff_electric);
      number(out, "eff_other", c.eff_other);
      number(out, "capacity", c.capacity);
      out << YAML::Key << "uses_electricity" << YAML::Value << c.uses_electricity;
      out << YAML::Key << "produces_heat" << YAML::Value << c.produces_heat;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "storages" << YAML::Value << YAML::BeginSeq;
    for (const auto& st : p.storages) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "id" << YAML::Value << st.id;
      out << YAML::Key << "carrier" << YAML::Value << std::string(to_string(st.carrier));
      number(out, "power_cap", st.power_cap);
      number(out, "e_min", st.e_min);
      number(out, "e_max", st.e_max);
      number(out, "eff_charge", st.eff_charge);
      number(out, "eff_discharge", st.eff_discharge);
      number(out, "initial_energy", st.initial_energy);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "demands" << YAML::Value << YAML::BeginSeq;
    for (const auto& d : p.demands) {
      const std::string prefix = p.id + "." + d.id;
      out << YAML::BeginMap;
      out << YAML::Key << "id" << YAML::Value << d.id;
      out << YAML::Key << "carrier" << YAML::Value << std::string(to_string(d.carrier));
      out << YAML::Key << "base" << YAML::Value << column(prefix + ".base", d.base);
      if (d.flexible()) {
        out << YAML::Key << "flex_min" << YAML::Value << column(prefix + ".flex_min", d.flex_min);
        out << YAML::Key << "flex_max" << YAML::Value << column(prefix + ".flex_max", d.flex_max);
        number(out, "flex_total", d.flex_total);
      }
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    if (!p.solar_thermal_max.empty()) {
      out << YAML::Key << "solar_thermal_max" << YAML::Value
          << column(p.id + ".solar_thermal_max", p.solar_thermal_max);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;

  std::ofstream yaml(path);
  if (!yaml) throw ScenarioError("cannot write " + path.string());
  yaml << out.c_str() << '\n';

  std::ofstream csv(path.parent_path() / csv_name);
  if (!csv) throw ScenarioError("cannot write " + csv_name);
  for (std::size_t c = 0; c < columns.size(); ++c) csv << (c ? "," : "") << columns[c].first;
  csv << '\n';
  for (int t = 0; t < s.horizon; ++t) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      csv << (c ? "," : "") << shortest(columns[c].second->at(t));
    }
    csv << '\n';
  }
}

}  // namespace mies
