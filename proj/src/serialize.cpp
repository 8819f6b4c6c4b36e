#include "ttree/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ttree/error.hpp"

namespace ttree {

namespace {

using nlohmann::json;

json ref_to_json(NodeRef r) {
  return json{{r.is_site() ? "site" : "tensor", r.index}};
}

NodeRef ref_from_json(const json& j) {
  if (j.contains("site")) return NodeRef::site(j.at("site").get<int>());
  if (j.contains("tensor")) return NodeRef::tensor(j.at("tensor").get<int>());
  throw IoError("model leg must name a site or a tensor");
}

}  // namespace

std::string model_to_json(const TensorTree& tree) {
  json doc;
  doc["format"] = "ttree-model";
  doc["version"] = 1;
  doc["mode"] = to_string(tree.mode());
  doc["site_dims"] = tree.site_dims();
  doc["root"] = tree.root();
  json tensors = json::array();
  for (int id = 0; id < tree.num_tensors(); ++id) {
    const Tensor& t = tree.tensor(id);
    tensors.push_back({{"left", ref_to_json(tree.node(id).left)},
                       {"right", ref_to_json(tree.node(id).right)},
                       {"shape", t.shape()},
                       {"values", std::vector<double>(t.values().begin(), t.values().end())}});
  }
  doc["tensors"] = std::move(tensors);
  return doc.dump();
}

TensorTree model_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "ttree-model") throw IoError("not a ttree model document");
    std::vector<TensorNode> nodes;
    std::vector<Tensor> tensors;
    for (const auto& jt : doc.at("tensors")) {
      nodes.push_back({ref_from_json(jt.at("left")), ref_from_json(jt.at("right")), -1});
      tensors.emplace_back(jt.at("shape").get<std::vector<int>>(),
                           jt.at("values").get<std::vector<double>>());
    }
    TensorTree tree(mode_from_string(doc.at("mode").get<std::string>()),
                    doc.at("site_dims").get<std::vector<int>>(), std::move(nodes),
                    std::move(tensors), doc.at("root").get<int>());
    auto issues = validate(tree);
    if (!issues.empty()) throw IoError("invalid model: " + issues.front());
    return tree;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const TensorTree& tree, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << model_to_json(tree) << '\n';
}

TensorTree load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace ttree
