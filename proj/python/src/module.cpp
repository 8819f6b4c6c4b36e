#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ttree/contract.hpp"
#include "ttree/data.hpp"
#include "ttree/error.hpp"
#include "ttree/factor.hpp"
#include "ttree/hmm.hpp"
#include "ttree/leaf_tree.hpp"
#include "ttree/optim.hpp"
#include "ttree/schemes.hpp"
#include "ttree/serialize.hpp"
#include "ttree/ward.hpp"

namespace py = pybind11;
using namespace ttree;

namespace {

py::array_t<double> tensor_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> a(shape);
  std::copy(t.values().begin(), t.values().end(), a.mutable_data());
  return a;
}

Tensor array_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  std::vector<int> shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict evaluation_dict(const Evaluation& ev) {
  py::list bonds;
  for (const auto& b : ev.bonds) {
    py::dict d;
    d["bond"] = b.bond;
    d["chi"] = b.chi;
    d["mi"] = b.mi;
    d["mi_raw"] = b.mi_raw;
    d["ee"] = b.ee ? py::cast(*b.ee) : py::none();
    bonds.append(d);
  }
  py::dict out;
  out["nll"] = ev.nll;
  out["total_mi"] = ev.total_mi;
  out["total_ee"] = ev.total_ee ? py::cast(*ev.total_ee) : py::none();
  out["zero_weight_samples"] = ev.zero_weight_samples;
  out["bonds"] = bonds;
  return out;
}

}  // namespace

PYBIND11_MODULE(_ttree, m) {
  m.doc() = "Adaptive tensor tree generative models";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("site_dims", &Dataset::site_dims)
      .def_readonly("site_names", &Dataset::site_names)
      .def_readonly("alphabet", &Dataset::alphabet)
      .def_property_readonly("num_sites", &Dataset::num_sites)
      .def("__len__", &Dataset::size)
      .def("checksum", &Dataset::checksum)
      .def("total_weight", &Dataset::total_weight)
      .def("symbols", [](const Dataset& d) {
        std::vector<std::vector<int>> out;
        for (const auto& s : d.samples) out.push_back(s.symbols());
        return out;
      }, "Symbol per site for every sample; -1 where the input is not one-hot.")
      .def("weights", [](const Dataset& d) {
        std::vector<double> w;
        for (const auto& s : d.samples) w.push_back(s.weight);
        return w;
      });

  m.def("dataset_from_symbols", [](const std::vector<std::vector<int>>& rows, int site_dim) {
    return dataset_from_symbols(rows, site_dim);
  }, py::arg("rows"), py::arg("site_dim"));
  m.def("read_dataset", [](const std::string& p) { return read_dataset(std::filesystem::path(p)); });
  m.def("write_dataset", [](const Dataset& d, const std::string& p) { write_dataset(d, std::filesystem::path(p)); });
  m.def("ingest_fasta", [](const std::vector<std::string>& paths) {
    return ingest_fasta(std::vector<std::filesystem::path>(paths.begin(), paths.end()));
  });

  m.def("gen_random_bits", &gen_random_bits, py::arg("n_samples"), py::arg("length"), py::arg("seed") = 0);
  m.def("gen_lrcorr", &gen_lrcorr, py::arg("n_samples"), py::arg("length"), py::arg("seed") = 0);
  m.def("gen_bitwise", [](const std::string& op, int l_op, int n, std::uint64_t seed) {
    return gen_bitwise(bitop_from_string(op), l_op, n, seed);
  }, py::arg("op"), py::arg("l_op"), py::arg("n_samples"), py::arg("seed") = 0);
  m.def("gen_bayesnet", [](int visible, double p, int n, std::uint64_t seed) {
    BayesNetData g = gen_bayesnet(make_bayesnet_spec(visible, p, seed), n, seed);
    const std::string nwk = topology_newick(g.truth, &g.data);
    return py::make_tuple(std::move(g.data), nwk);
  }, py::arg("visible"), py::arg("p_keep"), py::arg("n_samples"), py::arg("seed") = 0,
        "Returns (dataset, ground-truth Newick).");
  m.def("empirical_entropy", &empirical_entropy, py::arg("data"), py::arg("sites") = std::vector<int>{});
  m.def("empirical_mi", &empirical_mi);

  py::class_<TensorTree>(m, "TensorTree")
      .def_property_readonly("mode", [](const TensorTree& t) { return to_string(t.mode()); })
      .def_property_readonly("num_inputs", &TensorTree::num_inputs)
      .def_property_readonly("num_tensors", &TensorTree::num_tensors)
      .def_property_readonly("root", &TensorTree::root)
      .def_property_readonly("site_dims", &TensorTree::site_dims)
      .def("tensor", [](const TensorTree& t, int id) {
        if (id < 0 || id >= t.num_tensors()) throw py::index_error("tensor id out of range");
        return tensor_array(t.tensor(id));
      })
      .def("set_tensor", [](TensorTree& t, int id, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
        if (id < 0 || id >= t.num_tensors()) throw py::index_error("tensor id out of range");
        Tensor v = array_tensor(a);
        if (!v.same_shape(t.tensor(id))) throw ConfigError("shape mismatch for tensor " + std::to_string(id));
        t.tensor(id) = std::move(v);
      })
      .def("children", [](const TensorTree& t, int id) {
        auto ref = [](NodeRef r) { return py::make_tuple(r.is_site() ? "site" : "tensor", r.index); };
        return py::make_tuple(ref(t.node(id).left), ref(t.node(id).right));
      })
      .def("fingerprint", &TensorTree::fingerprint)
      .def("canonical_newick", &TensorTree::canonical_newick)
      .def("newick", [](const TensorTree& t) { return to_newick(tree_of(t)); })
      .def("to_json", [](const TensorTree& t) { return model_to_json(t); })
      .def_static("from_json", &model_from_json)
      .def("save", [](const TensorTree& t, const std::string& p) { save_model(t, p); })
      .def_static("load", [](const std::string& p) { return load_model(p); })
      .def("validate", [](const TensorTree& t) { return validate(t); });

  m.def("build_random_tree", [](int n, int chi_in, int chi_max, const std::string& mode, std::uint64_t seed) {
    return build_random_tree(n, chi_in, chi_max, mode_from_string(mode), seed);
  }, py::arg("num_inputs"), py::arg("chi_input"), py::arg("chi_max"), py::arg("mode") = "nonnegative",
        py::arg("seed") = 0);
  m.def("log_weight", [](const TensorTree& t, const std::vector<int>& symbols) {
    return log_weight(t, one_hot_sample(symbols, t.site_dims()));
  });
  m.def("log_partition", &log_partition);
  m.def("nll", [](const TensorTree& t, const Dataset& d) { return nll(t, d).value; });
  m.def("evaluate", [](const TensorTree& t, const Dataset& d) { return evaluation_dict(evaluate(t, d)); });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_property("scheme", [](const TrainConfig& c) { return to_string(c.scheme); },
                    [](TrainConfig& c, const std::string& s) { c.scheme = scheme_from_string(s); })
      .def_readwrite("eta", &TrainConfig::eta)
      .def_readwrite("t_max", &TrainConfig::t_max)
      .def_readwrite("n_batch", &TrainConfig::n_batch)
      .def_readwrite("chi_input", &TrainConfig::chi_input)
      .def_readwrite("chi_max", &TrainConfig::chi_max)
      .def_readwrite("structure_opt", &TrainConfig::structure_opt)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("hybrid_stage1_fraction", &TrainConfig::hybrid_stage1_fraction)
      .def_readwrite("checkpoint_every", &TrainConfig::checkpoint_every)
      .def_readwrite("fused_steps", &TrainConfig::fused_steps)
      .def_readwrite("pair_rounds", &TrainConfig::pair_rounds)
      .def_readwrite("weight_decay", &TrainConfig::weight_decay);
  m.def("table1_preset", [](const std::string& col) {
    const Preset p = table1_preset(col);
    return py::make_tuple(p.train, p.n_samples, p.length);
  }, "Returns (TrainConfig, n_samples, length).");

  m.def("train", [](const Dataset& d, const TrainConfig& c) {
    TrainResult r;
    {
      py::gil_scoped_release release;
      r = train(d, c);
    }
    py::list cps;
    for (const auto& cp : r.log.checkpoints) {
      py::dict x;
      x["iteration"] = cp.iteration;
      x["stage"] = cp.stage;
      x["nll"] = cp.nll;
      x["total_mi"] = cp.total_mi;
      x["total_ee"] = cp.total_ee ? py::cast(*cp.total_ee) : py::none();
      x["fingerprint"] = cp.fingerprint;
      x["nonnegative"] = cp.nonnegative;
      cps.append(x);
    }
    return py::make_tuple(std::move(r.tree), cps);
  }, py::arg("data"), py::arg("config"), "Returns (tree, checkpoints).");

  m.def("kl_divergence", py::overload_cast<const Eigen::MatrixXd&, const Eigen::MatrixXd&>(&kl_divergence));
  m.def("nmf", [](const Eigen::MatrixXd& v, int rank, int max_iters, double rel_tol) {
    NMFConfig cfg;
    cfg.max_iters = max_iters;
    cfg.rel_tol = rel_tol;
    const NMFResult r = nmf_mu_kl(v, rank, cfg);
    return py::make_tuple(r.w, r.h, r.kl_history);
  }, py::arg("v"), py::arg("rank"), py::arg("max_iters") = 500, py::arg("rel_tol") = 1e-6,
        "KL multiplicative updates from NNDSVD; returns (W, H, kl_history).");

  m.def("cid", [](const std::string& a, const std::string& b) { return cid(parse_newick(a), parse_newick(b)); });
  m.def("permutation_closeness", &permutation_closeness);
  m.def("extract_hmm", [](const TensorTree& t, int rank, int max_iters, std::uint64_t seed) {
    NMFConfig cfg;
    cfg.max_iters = max_iters;
    const HmmExtraction h = extract_hmm(t, rank, cfg, 1e-3, seed);
    py::list edges;
    for (const auto& e : h.edges) {
      py::dict d;
      d["parent"] = e.parent;
      d["child"] = py::make_tuple(e.child.is_site() ? "site" : "tensor", e.child.index);
      d["emission"] = e.emission();
      d["entries"] = e.entries;
      edges.append(d);
    }
    py::dict out;
    out["edges"] = edges;
    out["root_distribution"] = h.root_distribution;
    out["inexact"] = h.inexact;
    return out;
  }, py::arg("tree"), py::arg("rank") = 2, py::arg("max_iters") = 5000, py::arg("seed") = 0);
  m.def("ward_cluster", [](const Dataset& d) {
    const Dendrogram g = ward_cluster(d);
    std::vector<std::tuple<int, int, double, int>> merges;
    for (const auto& x : g.merges) merges.emplace_back(x.a, x.b, x.height, x.size);
    return py::make_tuple(to_newick(g.tree), merges);
  }, "Returns (newick, [(a, b, height, size), ...]).");
}
