#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mdpdist/mdp.hpp"
#include "mdpdist/types.hpp"

namespace mdpdist {

// MDP document: a JSON object with fields name (optional), states, actions,
// gamma, initial, policy, transition and reward (optional). Probability maps
// are sparse: omitted entries mean zero. Transition and reward rows are keyed
// by "<state>,<action>".
MdpSpec parse_mdp(const std::string& text);
std::string serialize_mdp(const MdpSpec& spec);

// Labeled matrix with free-form metadata. +inf serializes as the string "inf".
struct MatrixDocument {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix entries;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

std::string serialize_matrix(const MatrixDocument& doc);
MatrixDocument parse_matrix(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace mdpdist
