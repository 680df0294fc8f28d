#include "sdge/checkpoint.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace sdge {

namespace {
constexpr int kCheckpointVersion = 1;
}

void save_checkpoint(const ModelState& model, const std::string& path) {
  nlohmann::json doc;
  doc["version"] = kCheckpointVersion;
  nlohmann::json tensors = nlohmann::json::array();
  for (const ad::Parameter* p : model.parameters()) {
    nlohmann::json t;
    t["name"] = p->name;
    t["rows"] = p->value.rows();
    t["cols"] = p->value.cols();
    t["data"] = p->value.data();
    tensors.push_back(std::move(t));
  }
  doc["tensors"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << doc.dump();
}

void load_checkpoint(ModelState& model, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  if (doc.value("version", -1) != kCheckpointVersion) {
    throw std::runtime_error("load_checkpoint: unsupported checkpoint version");
  }

  std::unordered_map<std::string, const nlohmann::json*> by_name;
  for (const auto& t : doc.at("tensors")) {
    by_name[t.at("name").get<std::string>()] = &t;
  }
  for (ad::Parameter* p : model.parameters()) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      throw std::runtime_error("load_checkpoint: tensor " + p->name + " missing from " + path);
    }
    const auto& t = *it->second;
    if (t.at("rows").get<int>() != p->value.rows() || t.at("cols").get<int>() != p->value.cols()) {
      throw std::runtime_error("load_checkpoint: shape mismatch for tensor " + p->name);
    }
    p->value.data() = t.at("data").get<std::vector<double>>();
  }
}

}  // namespace sdge
