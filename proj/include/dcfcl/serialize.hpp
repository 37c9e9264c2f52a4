#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dcfcl/affinity.hpp"
#include "dcfcl/game.hpp"

namespace dcfcl {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Benefit table document:
//   {"num_clients": K,
//    "coalitions": [{"members": [0, 2], "benefits": [0.31, 0.27]}, ...]}
// members sorted ascending, benefits aligned with members.
nlohmann::json table_to_json(const BenefitTable& table);
BenefitTable table_from_json(const nlohmann::json& doc);

nlohmann::json partition_to_json(const Partition& p);
Partition partition_from_json(const nlohmann::json& doc);

// {"partition": [[..]], "stable_coalitions": [[..]], "traversal_rounds": n,
//  "transitions": n, "converged": bool}
nlohmann::json equilibrium_to_json(const EquilibriumResult& r);

BenefitTable load_table(const std::string& path);
void save_json(const nlohmann::json& doc, const std::string& path);

}  // namespace dcfcl
