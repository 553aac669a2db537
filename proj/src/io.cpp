#include "mdpdist/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mdpdist/errors.hpp"

namespace mdpdist {
namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw ParseError(message); }

const ordered_json& require_field(const ordered_json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) fail(std::string("missing field \"") + key + "\"");
  return *it;
}

std::vector<std::string> parse_labels(const ordered_json& node, const char* what) {
  if (!node.is_array()) fail(std::string(what) + " must be an array of strings");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& item : node) {
    if (!item.is_string()) fail(std::string(what) + " must contain only strings");
    const auto label = item.get<std::string>();
    if (!seen.insert(label).second)
      fail(std::string("duplicate ") + what + " label \"" + label + "\"");
    out.push_back(label);
  }
  return out;
}

Scalar parse_number(const ordered_json& node, const std::string& context) {
  if (!node.is_number()) fail(context + " must be a number");
  return node.get<Scalar>();
}

Index resolve_state(const StateActionIndex& idx, const std::string& label,
                    const std::string& context) {
  const auto s = idx.find_state(label);
  if (!s) fail(context + ": unknown state \"" + label + "\"");
  return *s;
}

Index resolve_pair(const StateActionIndex& idx, const std::string& key,
                   const std::string& context) {
  const std::vector<Index> hits = idx.find_pairs(key);
  if (hits.empty()) fail(context + ": unknown state-action key \"" + key + "\"");
  if (hits.size() > 1) fail(context + ": ambiguous state-action key \"" + key + "\"");
  return hits.front();
}

constexpr const char* kMdpFields[] = {"name",   "states",     "actions", "gamma",
                                      "initial", "policy",    "transition", "reward"};

}  // namespace

MdpSpec parse_mdp(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("document must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(std::begin(kMdpFields), std::end(kMdpFields), key) ==
        std::end(kMdpFields))
      fail("unknown field \"" + key + "\"");
  }

  MdpSpec spec;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) fail("name must be a string");
    spec.name = doc["name"].get<std::string>();
  }
  spec.states = parse_labels(require_field(doc, "states"), "states");
  spec.actions = parse_labels(require_field(doc, "actions"), "actions");
  spec.gamma = parse_number(require_field(doc, "gamma"), "gamma");

  const StateActionIndex idx(spec.states, spec.actions);
  const Index ns = idx.num_states();
  const Index na = idx.num_actions();
  const Index n = idx.size();
  spec.transition = Matrix::Zero(n, ns);
  spec.policy = Matrix::Zero(ns, na);
  spec.initial = Vector::Zero(ns);
  spec.reward = Vector::Zero(n);

  const ordered_json& initial = require_field(doc, "initial");
  if (!initial.is_object()) fail("initial must be an object");
  for (const auto& [state, value] : initial.items()) {
    spec.initial[resolve_state(idx, state, "initial")] =
        parse_number(value, "initial[" + state + "]");
  }

  const ordered_json& policy = require_field(doc, "policy");
  if (!policy.is_object()) fail("policy must be an object");
  for (const auto& [state, row] : policy.items()) {
    const Index s = resolve_state(idx, state, "policy");
    if (!row.is_object()) fail("policy[" + state + "] must be an object");
    for (const auto& [action, value] : row.items()) {
      const auto a = idx.find_action(action);
      if (!a) fail("policy[" + state + "]: unknown action \"" + action + "\"");
      spec.policy(s, *a) = parse_number(value, "policy[" + state + "][" + action + "]");
    }
  }

  const ordered_json& transition = require_field(doc, "transition");
  if (!transition.is_object()) fail("transition must be an object");
  for (const auto& [key, row] : transition.items()) {
    const Index x = resolve_pair(idx, key, "transition");
    if (!row.is_object()) fail("transition[" + key + "] must be an object");
    for (const auto& [state, value] : row.items()) {
      spec.transition(x, resolve_state(idx, state, "transition[" + key + "]")) =
          parse_number(value, "transition[" + key + "][" + state + "]");
    }
  }

  if (doc.contains("reward")) {
    const ordered_json& reward = doc["reward"];
    if (!reward.is_object()) fail("reward must be an object");
    for (const auto& [key, value] : reward.items()) {
      spec.reward[resolve_pair(idx, key, "reward")] =
          parse_number(value, "reward[" + key + "]");
    }
  }
  return spec;
}

std::string serialize_mdp(const MdpSpec& spec) {
  const StateActionIndex idx(spec.states, spec.actions);
  ordered_json doc;
  if (!spec.name.empty()) doc["name"] = spec.name;
  doc["states"] = spec.states;
  doc["actions"] = spec.actions;
  doc["gamma"] = spec.gamma;

  ordered_json initial = ordered_json::object();
  for (Index s = 0; s < spec.num_states(); ++s) {
    if (spec.initial[s] != 0.0) initial[spec.states[s]] = spec.initial[s];
  }
  doc["initial"] = std::move(initial);

  ordered_json policy = ordered_json::object();
  for (Index s = 0; s < spec.num_states(); ++s) {
    ordered_json row = ordered_json::object();
    for (Index a = 0; a < spec.num_actions(); ++a) {
      if (spec.policy(s, a) != 0.0) row[spec.actions[a]] = spec.policy(s, a);
    }
    if (!row.empty()) policy[spec.states[s]] = std::move(row);
  }
  doc["policy"] = std::move(policy);

  ordered_json transition = ordered_json::object();
  for (Index x = 0; x < spec.num_pairs(); ++x) {
    ordered_json row = ordered_json::object();
    for (Index s2 = 0; s2 < spec.num_states(); ++s2) {
      if (spec.transition(x, s2) != 0.0) row[spec.states[s2]] = spec.transition(x, s2);
    }
    if (!row.empty()) transition[idx.pair_label(x)] = std::move(row);
  }
  doc["transition"] = std::move(transition);

  ordered_json reward = ordered_json::object();
  for (Index x = 0; x < spec.num_pairs(); ++x) {
    if (spec.reward.size() == spec.num_pairs() && spec.reward[x] != 0.0)
      reward[idx.pair_label(x)] = spec.reward[x];
  }
  if (!reward.empty()) doc["reward"] = std::move(reward);

  return doc.dump(2) + "\n";
}

std::string serialize_matrix(const MatrixDocument& doc) {
  ordered_json j;
  j["row_labels"] = doc.row_labels;
  j["col_labels"] = doc.col_labels;
  ordered_json entries = ordered_json::array();
  for (Index r = 0; r < doc.entries.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Index c = 0; c < doc.entries.cols(); ++c) {
      const Scalar v = doc.entries(r, c);
      if (std::isinf(v)) {
        row.push_back("inf");
      } else {
        row.push_back(v);
      }
    }
    entries.push_back(std::move(row));
  }
  j["entries"] = std::move(entries);
  j["metadata"] = doc.metadata;
  return j.dump(2) + "\n";
}

MatrixDocument parse_matrix(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("document must be a JSON object");
  MatrixDocument doc;
  doc.row_labels = parse_labels(require_field(j, "row_labels"), "row_labels");
  doc.col_labels = parse_labels(require_field(j, "col_labels"), "col_labels");
  const ordered_json& entries = require_field(j, "entries");
  if (!entries.is_array() || entries.size() != doc.row_labels.size())
    fail("entries must have one row per row label");
  doc.entries.resize(static_cast<Index>(doc.row_labels.size()),
                     static_cast<Index>(doc.col_labels.size()));
  Index r = 0;
  for (const auto& row : entries) {
    if (!row.is_array() || row.size() != doc.col_labels.size())
      fail("entries must have one column per column label");
    Index c = 0;
    for (const auto& cell : row) {
      if (cell.is_string()) {
        if (cell.get<std::string>() != "inf") fail("matrix entries must be numbers or \"inf\"");
        doc.entries(r, c) = kInfinity;
      } else {
        doc.entries(r, c) = parse_number(cell, "entries");
      }
      ++c;
    }
    ++r;
  }
  if (j.contains("metadata")) {
    if (!j["metadata"].is_object()) fail("metadata must be an object");
    doc.metadata = j["metadata"];
  }
  return doc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read \"" + path + "\"");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write \"" + path + "\"");
  out << content;
}

}  // namespace mdpdist
