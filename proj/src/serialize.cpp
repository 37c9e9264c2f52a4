#include "dcfcl/serialize.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace dcfcl {

using nlohmann::json;

json table_to_json(const BenefitTable& table) {
  json doc;
  doc["num_clients"] = table.num_clients();
  json list = json::array();
  for (Coalition s : table.coalitions()) {
    const auto b = table.benefits(s);
    list.push_back({{"members", s.members()}, {"benefits", std::vector<double>(b.begin(), b.end())}});
  }
  doc["coalitions"] = std::move(list);
  return doc;
}

namespace {

Coalition coalition_from_json(const json& j, int k) {
  if (!j.is_array() || j.empty()) throw FormatError("coalition must be a nonempty id list");
  std::vector<int> ids;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw FormatError("client ids must be integers");
    const int id = v.get<int>();
    if (id < 0 || id >= k) throw FormatError("client id " + std::to_string(id) + " out of range");
    if (!ids.empty() && id <= ids.back()) throw FormatError("coalition members must be sorted and unique");
    ids.push_back(id);
  }
  return Coalition(std::span<const int>(ids));
}

}  // namespace

BenefitTable table_from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError("benefit table must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "num_clients" && key != "coalitions") throw FormatError("unknown key '" + key + "'");
  }
  if (!doc.contains("num_clients") || !doc["num_clients"].is_number_integer()) {
    throw FormatError("missing integer 'num_clients'");
  }
  const int k = doc["num_clients"].get<int>();
  if (k < 1 || k > BenefitTable::kMaxTableClients) throw FormatError("num_clients out of range");
  if (!doc.contains("coalitions") || !doc["coalitions"].is_array()) {
    throw FormatError("missing array 'coalitions'");
  }
  BenefitTable table(k);
  for (const auto& entry : doc["coalitions"]) {
    if (!entry.is_object() || !entry.contains("members") || !entry.contains("benefits")) {
      throw FormatError("coalition entries need 'members' and 'benefits'");
    }
    const Coalition s = coalition_from_json(entry["members"], k);
    if (table.has(s)) throw FormatError("duplicate coalition " + s.to_string());
    const auto& b = entry["benefits"];
    if (!b.is_array() || static_cast<int>(b.size()) != s.size()) {
      throw FormatError("coalition " + s.to_string() + ": benefits must align with members");
    }
    table.mark_present(s);
    auto out = table.benefits(s);
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!b[i].is_number()) throw FormatError("benefits must be numbers");
      const double v = b[i].get<double>();
      if (!std::isfinite(v)) throw FormatError("benefits must be finite");
      out[i] = v;
    }
    if (s.size() == 1 && out[0] != 0.0) {
      throw FormatError("singleton " + s.to_string() + " must have benefit 0");
    }
  }
  for (int i = 0; i < k; ++i) {
    if (!table.has(Coalition::singleton(i))) {
      throw FormatError("missing singleton {" + std::to_string(i) + "}");
    }
  }
  return table;
}

json partition_to_json(const Partition& p) { return p.to_lists(); }

Partition partition_from_json(const json& doc) {
  if (!doc.is_array()) throw FormatError("partition must be a list of id lists");
  std::vector<Coalition> out;
  for (const auto& c : doc) out.push_back(coalition_from_json(c, kMaxClients));
  try {
    return Partition(std::move(out));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

json equilibrium_to_json(const EquilibriumResult& r) {
  json sc = json::array();
  for (Coalition c : r.stable_coalitions) sc.push_back(c.members());
  return {{"partition", partition_to_json(r.partition)},
          {"stable_coalitions", std::move(sc)},
          {"traversal_rounds", r.traversal_rounds},
          {"transitions", r.transitions},
          {"converged", r.converged}};
}

BenefitTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
  return table_from_json(doc);
}

void save_json(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setw(2) << doc << "\n";
}

}  // namespace dcfcl
