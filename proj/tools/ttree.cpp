#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttree/data.hpp"
#include "ttree/dot.hpp"
#include "ttree/error.hpp"
#include "ttree/hmm.hpp"
#include "ttree/leaf_tree.hpp"
#include "ttree/schemes.hpp"
#include "ttree/serialize.hpp"
#include "ttree/ward.hpp"

#ifndef TTREE_VERSION
#define TTREE_VERSION "dev"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ttree;

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("error writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

int thread_count() {
  const char* env = std::getenv("TTREE_NUM_THREADS");
  if (env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) throw ConfigError(std::string("TTREE_NUM_THREADS must be a positive integer, got ") + env);
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// "table1:<column>" -> column
std::string preset_column(const std::string& preset) {
  const std::string prefix = "table1:";
  if (preset.rfind(prefix, 0) != 0) throw ConfigError("presets look like table1:<column>, got " + preset);
  return preset.substr(prefix.size());
}

json manifest_base(const std::string& command, std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["version"] = TTREE_VERSION;
  m["seed"] = seed;
  return m;
}

json dataset_entry(const fs::path& path, const Dataset& d) {
  return {{"path", path.string()},
          {"checksum", hex(d.checksum())},
          {"samples", d.size()},
          {"sites", d.num_sites()}};
}

json config_json(const TrainConfig& c) {
  return {{"scheme", to_string(c.scheme)},
          {"eta", c.eta},
          {"t_max", c.t_max},
          {"n_batch", c.n_batch},
          {"chi_input", c.chi_input},
          {"chi_max", c.chi_max},
          {"structure_opt", c.structure_opt},
          {"seed", c.seed},
          {"hybrid_stage1_fraction", c.hybrid_stage1_fraction},
          {"checkpoint_every", c.checkpoint_every},
          {"fused_steps", c.fused_steps},
          {"pair_rounds", c.pair_rounds},
          {"weight_decay", c.weight_decay},
          {"nmf_max_iters", c.nmf.max_iters},
          {"nmf_rel_tol", c.nmf.rel_tol}};
}

json number_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// --- gen ----------------------------------------------------------------

struct GenArgs {
  std::string task;
  std::string preset;
  int n = 1000;
  int length = 16;
  std::string op = "and";
  int l_op = 4;
  int visible = 16;
  double p = 0.8;
  int leaves = 8;
  int states = 4;
  double offdiag = 0.05;
  std::vector<std::string> fasta;
  std::uint64_t seed = 0;
  std::string out;
  CLI::Option* n_opt = nullptr;
  CLI::Option* l_opt = nullptr;
  CLI::Option* visible_opt = nullptr;
  CLI::Option* lop_opt = nullptr;
};

int cmd_gen(GenArgs& a) {
  if (!a.preset.empty()) {
    const std::string col = preset_column(a.preset);
    if (col == "mtdna") throw ConfigError("the mtdna column has no generator; use `gen fasta` on the alignment");
    const Preset p = table1_preset(col);
    if (a.task.empty()) a.task = col;
    if (a.task != col) throw ConfigError("task " + a.task + " conflicts with preset " + a.preset);
    if (!a.n_opt->count()) a.n = p.n_samples;
    if (!a.l_opt->count()) a.length = p.length;
    if (col == "bitwise" && !a.lop_opt->count()) a.l_op = p.length / 3;
    if (col == "bayesnet" && !a.visible_opt->count()) a.visible = p.length;
  }
  if (a.task.empty()) throw ConfigError("gen needs a task or --preset");

  Dataset data;
  std::optional<std::string> truth;
  json params;
  if (a.task == "random") {
    data = gen_random_bits(a.n, a.length, a.seed);
    params = {{"n", a.n}, {"l", a.length}};
  } else if (a.task == "lrcorr") {
    data = gen_lrcorr(a.n, a.length, a.seed);
    params = {{"n", a.n}, {"l", a.length}};
  } else if (a.task == "bitwise") {
    data = gen_bitwise(bitop_from_string(a.op), a.l_op, a.n, a.seed);
    params = {{"n", a.n}, {"op", a.op}, {"l_op", a.l_op}};
  } else if (a.task == "bayesnet") {
    const BayesNetSpec spec = make_bayesnet_spec(a.visible, a.p, a.seed);
    BayesNetData g = gen_bayesnet(spec, a.n, a.seed);
    data = std::move(g.data);
    truth = topology_newick(g.truth, &data);
    params = {{"n", a.n}, {"visible", a.visible}, {"p", a.p}};
  } else if (a.task == "treehmm") {
    Rng rng = make_rng(a.seed, "topology");
    TreeHmm hmm;
    hmm.topology = random_split_topology(a.leaves, rng);
    hmm.root_distribution = Eigen::VectorXd::Constant(a.states, 1.0 / a.states);
    hmm.transition = keep_transition(a.states, 1.0 - a.offdiag);
    if (a.states == 4) hmm.alphabet = "ACTG";
    data = sample_tree_hmm(hmm, a.n, a.seed);
    truth = topology_newick(hmm.topology, &data);
    params = {{"n", a.n}, {"leaves", a.leaves}, {"states", a.states}, {"offdiag", a.offdiag}};
  } else if (a.task == "fasta") {
    if (a.fasta.empty()) throw ConfigError("gen fasta needs --fasta <file>...");
    std::vector<fs::path> paths(a.fasta.begin(), a.fasta.end());
    data = ingest_fasta(paths);
    params = {{"fasta", a.fasta}};
  } else {
    throw ConfigError("unknown task " + a.task + " (random, lrcorr, bitwise, bayesnet, treehmm, fasta)");
  }

  const fs::path out(a.out);
  if (out.has_parent_path()) make_dirs(out.parent_path());
  write_dataset(data, out);
  json m = manifest_base("gen", a.seed);
  m["task"] = a.task;
  m["params"] = params;
  if (!a.preset.empty()) m["preset"] = a.preset;
  m["dataset"] = dataset_entry(out, data);
  m["outputs"] = {{"dataset", out.string()}};
  if (truth) {
    const fs::path tpath = out.string() + ".truth.nwk";
    write_text(tpath, *truth + "\n");
    m["outputs"]["truth"] = tpath.string();
  }
  write_text(out.string() + ".manifest.json", m.dump(2) + "\n");
  std::cout << "wrote " << out.string() << ": " << data.size() << " samples, " << data.num_sites()
            << " sites\n";
  return 0;
}

// --- train --------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string preset;
  std::string scheme = "natt";
  TrainConfig cfg;
  bool no_structure = false;
  bool dot_ee = false;
  int trials = 1;
  std::map<std::string, CLI::Option*> opts;
  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

TrainConfig resolve_config(const TrainArgs& a, const Dataset& data) {
  TrainConfig c;
  if (!a.preset.empty()) c = table1_preset(preset_column(a.preset)).train;
  const TrainConfig& f = a.cfg;
  if (a.given("scheme") || a.preset.empty()) c.scheme = scheme_from_string(a.scheme);
  if (a.given("eta")) c.eta = f.eta;
  if (a.given("t-max")) c.t_max = f.t_max;
  if (a.given("batch")) c.n_batch = f.n_batch;
  if (a.given("chi-max")) c.chi_max = f.chi_max;
  c.chi_input = a.given("chi-input") ? f.chi_input : data.uniform_site_dim();
  if (a.given("seed")) c.seed = f.seed;
  if (a.given("hybrid-fraction")) c.hybrid_stage1_fraction = f.hybrid_stage1_fraction;
  if (a.given("checkpoint-every")) c.checkpoint_every = f.checkpoint_every;
  if (a.given("fused-steps")) c.fused_steps = f.fused_steps;
  if (a.given("pair-rounds")) c.pair_rounds = f.pair_rounds;
  if (a.given("weight-decay")) c.weight_decay = f.weight_decay;
  if (a.given("nmf-iters")) c.nmf.max_iters = f.nmf.max_iters;
  if (a.no_structure) c.structure_opt = false;
  // A preset batch larger than a small dataset falls back to full batches.
  if (!a.given("batch") && static_cast<std::size_t>(c.n_batch) > data.size()) {
    c.n_batch = static_cast<int>(data.size());
  }
  return c;
}

struct TrialSummary {
  double nll = 0.0;
  double total_mi = 0.0;
  std::optional<double> total_ee;
  std::string newick;
};

TrialSummary run_trial(const Dataset& data, const fs::path& data_path, const TrainConfig& cfg,
                       const fs::path& dir, bool dot_ee, const std::vector<std::string>& argv) {
  make_dirs(dir);
  std::ofstream log(dir / "log.jsonl");
  if (!log) throw IoError("cannot write " + (dir / "log.jsonl").string());

  TrainCallbacks cb;
  cb.on_visit = [&](const BondVisit& v, int iteration, const std::string& stage) {
    json cand = json::array();
    for (const auto& m : v.candidate_mi) cand.push_back(number_or_null(m));
    log << json{{"type", "visit"},
                {"iteration", iteration},
                {"stage", stage},
                {"sweep", v.sweep},
                {"bond", v.report.bond},
                {"candidate_mi", cand},
                {"chosen", to_string(v.chosen)},
                {"mi", v.report.mi},
                {"mi_raw", v.report.mi_raw},
                {"ee", number_or_null(v.report.ee)},
                {"chi", v.report.chi},
                {"nll_after", finite_or_null(v.nll_after)},
                {"zero_weight_samples", v.zero_weight_samples},
                {"seconds", v.seconds}}
               .dump()
        << "\n";
  };
  cb.on_checkpoint = [&](const Checkpoint& c) {
    log << json{{"type", "checkpoint"},
                {"iteration", c.iteration},
                {"stage", c.stage},
                {"nll", finite_or_null(c.nll)},
                {"total_mi", c.total_mi},
                {"total_ee", number_or_null(c.total_ee)},
                {"fingerprint", hex(c.fingerprint)},
                {"nonnegative", c.nonnegative}}
               .dump()
        << "\n";
  };

  TrainResult r = train(data, cfg, cb);
  if (r.log.handoff_before) {
    log << json{{"type", "handoff"},
                {"before", hex(*r.log.handoff_before)},
                {"after", hex(*r.log.handoff_after)}}
               .dump()
        << "\n";
  }
  log.close();

  const Evaluation ev = evaluate(r.tree, data);
  save_model(r.tree, dir / "model.json");
  TrialSummary s;
  s.nll = ev.nll;
  s.total_mi = ev.total_mi;
  s.total_ee = ev.total_ee;
  s.newick = to_newick(tree_of(r.tree, &data));
  write_text(dir / "tree.nwk", s.newick + "\n");
  write_text(dir / "tree.dot", model_dot(r.tree, ev.bonds, cfg.chi_max, dot_ee && ev.total_ee, &data));

  json m = manifest_base("train", cfg.seed);
  m["argv"] = argv;
  m["config"] = config_json(cfg);
  m["dataset"] = dataset_entry(data_path, data);
  m["outputs"] = {{"model", (dir / "model.json").string()},
                  {"log", (dir / "log.jsonl").string()},
                  {"newick", (dir / "tree.nwk").string()},
                  {"dot", (dir / "tree.dot").string()}};
  m["result"] = {{"nll", finite_or_null(ev.nll)},
                 {"total_mi", ev.total_mi},
                 {"total_ee", number_or_null(ev.total_ee)},
                 {"fingerprint", hex(r.tree.fingerprint())},
                 {"zero_weight_samples", r.log.zero_weight_samples}};
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  return s;
}

int cmd_train(TrainArgs& a, const std::vector<std::string>& argv) {
  const fs::path data_path(a.data);
  const Dataset data = read_dataset(data_path);
  TrainConfig cfg = resolve_config(a, data);
  cfg.validate(&data);
  if (a.trials < 1) throw ConfigError("--trials must be positive");
  const fs::path out(a.out);

  if (a.trials == 1) {
    const TrialSummary s = run_trial(data, data_path, cfg, out, a.dot_ee, argv);
    std::cout << "nll " << s.nll << "\ntotal_mi " << s.total_mi << "\n";
    if (s.total_ee) std::cout << "total_ee " << *s.total_ee << "\n";
    std::cout << "tree " << s.newick << "\n";
    return 0;
  }

  // Independent seeds in isolated subdirectories.
  std::vector<TrialSummary> results(a.trials);
  std::vector<std::exception_ptr> errors(a.trials);
  std::atomic<int> next{0};
  std::mutex print;
  auto worker = [&] {
    for (int k = next++; k < a.trials; k = next++) {
      TrainConfig c = cfg;
      c.seed = cfg.seed + static_cast<std::uint64_t>(k);
      try {
        results[k] = run_trial(data, data_path, c, out / ("trial_" + std::to_string(k)), a.dot_ee, argv);
        std::lock_guard<std::mutex> lock(print);
        std::cout << "trial " << k << " seed " << c.seed << " nll " << results[k].nll << " total_mi "
                  << results[k].total_mi << "\n";
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(thread_count(), a.trials);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return 0;
}

// --- eval ---------------------------------------------------------------

int cmd_eval(const std::string& model_path, const std::string& data_path, const std::string& format) {
  const TensorTree tree = load_model(model_path);
  const Dataset data = read_dataset(data_path);
  if (data.site_dims != tree.site_dims()) throw ConfigError("dataset sites do not match the model inputs");
  const Evaluation ev = evaluate(tree, data);
  const bool born = tree.mode() == Mode::BornMachine;
  if (format == "json") {
    json bonds = json::array();
    for (const auto& b : ev.bonds) {
      json r = {{"bond", b.bond}, {"chi", b.chi}, {"mi", b.mi}, {"mi_raw", b.mi_raw}};
      if (b.ee) r["ee"] = *b.ee;
      bonds.push_back(r);
    }
    json out = {{"mode", to_string(tree.mode())},
                {"nll", finite_or_null(ev.nll)},
                {"total_mi", ev.total_mi},
                {"zero_weight_samples", ev.zero_weight_samples},
                {"bonds", bonds}};
    if (ev.total_ee) {
      out["total_ee"] = *ev.total_ee;
    } else {
      out["note"] = "entanglement entropy is not defined for nonnegative models";
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  std::cout << "mode " << to_string(tree.mode()) << "\n";
  std::cout << "nll " << ev.nll << "\n";
  if (ev.zero_weight_samples) std::cout << "zero_weight_samples " << ev.zero_weight_samples << "\n";
  std::cout << "total_mi " << ev.total_mi << "\n";
  if (ev.total_ee) {
    std::cout << "total_ee " << *ev.total_ee << "\n";
  } else {
    std::cout << "# entanglement entropy is not defined for nonnegative models\n";
  }
  std::cout << "bond\tchi\tmi" << (born ? "\tee" : "") << "\n";
  for (const auto& b : ev.bonds) {
    std::cout << b.bond << "\t" << b.chi << "\t" << b.mi;
    if (b.ee) std::cout << "\t" << *b.ee;
    std::cout << "\n";
  }
  return 0;
}

// --- treedist -----------------------------------------------------------

LeafTree read_tree(const fs::path& p) { return parse_newick(read_text(p)); }

int cmd_treedist(const std::vector<std::string>& files, const std::string& dir, const std::string& truth) {
  std::vector<fs::path> paths(files.begin(), files.end());
  if (!dir.empty()) {
    if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".nwk" &&
          e.path().filename().string().find(".truth") == std::string::npos) {
        paths.push_back(e.path());
      }
    std::sort(paths.begin(), paths.end());
  }
  if (!truth.empty()) {
    const LeafTree t = read_tree(truth);
    for (const auto& p : paths) std::cout << p.string() << "\t" << truth << "\t" << cid(read_tree(p), t) << "\n";
    if (paths.size() < 2) return 0;
  }
  if (paths.size() < 2) throw ConfigError("treedist needs two trees, a --dir with several, or --truth");
  std::vector<LeafTree> trees;
  for (const auto& p : paths) trees.push_back(read_tree(p));
  if (paths.size() == 2 && dir.empty()) {
    std::cout << cid(trees[0], trees[1]) << "\n";
    return 0;
  }
  std::vector<double> values;
  for (std::size_t i = 0; i < trees.size(); ++i)
    for (std::size_t j = i + 1; j < trees.size(); ++j) {
      const double d = cid(trees[i], trees[j]);
      values.push_back(d);
      std::cout << paths[i].string() << "\t" << paths[j].string() << "\t" << d << "\n";
    }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  std::cout << "# pairs " << n << " median " << median << "\n";
  return 0;
}

// --- extract ------------------------------------------------------------

int max_bond_dim(const TensorTree& t) {
  int chi = 1;
  for (int id = 0; id < t.num_tensors(); ++id) chi = std::max(chi, t.tensor(id).dim(2));
  return chi;
}

std::string node_name(NodeRef r, const Dataset* names) {
  if (r.is_site()) return names ? names->site_label(r.index) : "site" + std::to_string(r.index);
  return "t" + std::to_string(r.index);
}

int cmd_extract(const std::string& model_path, int rank, const std::string& out_dir,
                const std::string& data_path, int max_iters, std::uint64_t seed) {
  const TensorTree tree = load_model(model_path);
  if (tree.mode() != Mode::Nonnegative) {
    throw ConfigError(
        "extract needs a nonnegative model: Born machine amplitudes do not give an interpretable HMM. "
        "Train with --scheme natt or --scheme hybrid.");
  }
  if (rank < 1) throw ConfigError("--rank must be positive");
  if (rank > max_bond_dim(tree)) {
    std::cerr << "warning: rank " << rank << " exceeds the largest bond dimension " << max_bond_dim(tree)
              << "; the CP decomposition is overcomplete\n";
  }
  std::optional<Dataset> names;
  if (!data_path.empty()) names = read_dataset(data_path);
  const Dataset* np = names ? &*names : nullptr;
  NMFConfig cfg;
  cfg.max_iters = max_iters;
  const HmmExtraction hmm = extract_hmm(tree, rank, cfg, 1e-3, seed);

  const fs::path out(out_dir);
  make_dirs(out);
  json edges = json::array();
  for (const auto& e : hmm.edges) {
    const std::string name = node_name(NodeRef::tensor(e.parent), np) + "_" + node_name(e.child, np);
    std::ostringstream txt;
    txt << "# " << (e.emission() ? "emission" : "transition") << " " << node_name(NodeRef::tensor(e.parent), np)
        << " -> " << node_name(e.child, np) << "\n# rows: child state, columns: parent state\n";
    txt << std::setprecision(17);
    for (int i = 0; i < e.entries.rows(); ++i) {
      for (int j = 0; j < e.entries.cols(); ++j) txt << (j ? " " : "") << e.entries(i, j);
      txt << "\n";
    }
    write_text(out / ("edge_" + name + ".txt"), txt.str());
    json rows = json::array();
    for (int i = 0; i < e.entries.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < e.entries.cols(); ++j) row.push_back(e.entries(i, j));
      rows.push_back(row);
    }
    json rec = {{"parent", node_name(NodeRef::tensor(e.parent), np)},
                {"child", node_name(e.child, np)},
                {"emission", e.emission()},
                {"entries", rows}};
    if (!e.emission()) rec["permutation_closeness"] = permutation_closeness(e.entries);
    edges.push_back(rec);
    std::cout << name;
    if (!e.emission()) std::cout << "\tcloseness " << permutation_closeness(e.entries);
    std::cout << "\n";
  }
  json root = json::array();
  for (double x : hmm.root_distribution) root.push_back(x);
  json doc = {{"rank", rank}, {"root_distribution", root}, {"edges", edges}, {"inexact_tensors", hmm.inexact}};
  write_text(out / "hmm.json", doc.dump(2) + "\n");
  write_text(out / "hmm.dot", hmm_dot(tree, hmm, np));
  if (!hmm.inexact.empty()) {
    std::cerr << "warning: " << hmm.inexact.size() << " tensor(s) have an inexact rank-" << rank
              << " decomposition\n";
  }
  json m = manifest_base("extract", seed);
  m["model"] = model_path;
  m["rank"] = rank;
  m["outputs"] = {{"hmm", (out / "hmm.json").string()}, {"dot", (out / "hmm.dot").string()}};
  write_text(out / "manifest.json", m.dump(2) + "\n");
  return 0;
}

// --- cluster ------------------------------------------------------------

int cmd_cluster(const std::string& data_path, const std::string& out_dir) {
  const Dataset data = read_dataset(data_path);
  const Dendrogram d = ward_cluster(data);
  const std::string nwk = to_newick(d.tree);
  std::cout << nwk << "\n";
  if (out_dir.empty()) return 0;
  const fs::path out(out_dir);
  make_dirs(out);
  write_text(out / "ward.nwk", nwk + "\n");
  std::ostringstream tsv;
  tsv << "a\tb\theight\tsize\n";
  for (const auto& m : d.merges) tsv << m.a << "\t" << m.b << "\t" << m.height << "\t" << m.size << "\n";
  write_text(out / "merges.tsv", tsv.str());
  json man = manifest_base("cluster", 0);
  man["dataset"] = dataset_entry(data_path, data);
  man["outputs"] = {{"newick", (out / "ward.nwk").string()}, {"merges", (out / "merges.tsv").string()}};
  write_text(out / "manifest.json", man.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive tensor tree generative models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TTREE_VERSION);
  const std::vector<std::string> args(argv, argv + argc);

  GenArgs g;
  auto* gen = app.add_subcommand("gen", "Generate or ingest a dataset");
  gen->add_option("task", g.task, "random, lrcorr, bitwise, bayesnet, treehmm or fasta");
  gen->add_option("--preset", g.preset, "table1:<column>");
  g.n_opt = gen->add_option("--n", g.n, "number of samples");
  g.l_opt = gen->add_option("--l", g.length, "string length (random, lrcorr)");
  gen->add_option("--op", g.op, "and or xor (bitwise)");
  g.lop_opt = gen->add_option("--l-op", g.l_op, "operand length (bitwise)");
  g.visible_opt = gen->add_option("--visible", g.visible, "visible sites (bayesnet)");
  gen->add_option("--p", g.p, "keep probability (bayesnet)");
  gen->add_option("--leaves", g.leaves, "leaves (treehmm)");
  gen->add_option("--states", g.states, "hidden states (treehmm)");
  gen->add_option("--offdiag", g.offdiag, "off-diagonal transition mass (treehmm)");
  gen->add_option("--fasta", g.fasta, "aligned FASTA files (fasta)");
  gen->add_option("--seed", g.seed);
  gen->add_option("--out,-o", g.out, "dataset file")->required();

  TrainArgs t;
  auto* tr = app.add_subcommand("train", "Train a tensor tree");
  tr->add_option("--data,-d", t.data)->required();
  tr->add_option("--out,-o", t.out, "output directory")->required();
  tr->add_option("--preset", t.preset, "table1:<column>");
  t.opts["scheme"] = tr->add_option("--scheme", t.scheme, "natt, bmatt or hybrid");
  t.opts["eta"] = tr->add_option("--eta", t.cfg.eta);
  t.opts["t-max"] = tr->add_option("--t-max", t.cfg.t_max, "bond visits");
  t.opts["batch"] = tr->add_option("--batch", t.cfg.n_batch);
  t.opts["chi-max"] = tr->add_option("--chi-max", t.cfg.chi_max);
  t.opts["chi-input"] = tr->add_option("--chi-input", t.cfg.chi_input, "defaults to the dataset's site dimension");
  t.opts["seed"] = tr->add_option("--seed", t.cfg.seed);
  t.opts["hybrid-fraction"] = tr->add_option("--hybrid-fraction", t.cfg.hybrid_stage1_fraction);
  t.opts["checkpoint-every"] = tr->add_option("--checkpoint-every", t.cfg.checkpoint_every);
  t.opts["fused-steps"] = tr->add_option("--fused-steps", t.cfg.fused_steps);
  t.opts["pair-rounds"] = tr->add_option("--pair-rounds", t.cfg.pair_rounds);
  t.opts["weight-decay"] = tr->add_option("--weight-decay", t.cfg.weight_decay);
  t.opts["nmf-iters"] = tr->add_option("--nmf-iters", t.cfg.nmf.max_iters);
  tr->add_flag("--no-structure-opt", t.no_structure, "keep the initial topology");
  tr->add_flag("--dot-ee", t.dot_ee, "color bonds by entanglement entropy (Born models)");
  tr->add_option("--trials", t.trials, "independent seeds, one subdirectory each");

  std::string e_model, e_data, e_format = "text";
  auto* ev = app.add_subcommand("eval", "Evaluate a model on a dataset");
  ev->add_option("--model,-m", e_model)->required();
  ev->add_option("--data,-d", e_data)->required();
  ev->add_option("--format", e_format)->check(CLI::IsMember({"text", "json"}));

  std::vector<std::string> td_files;
  std::string td_dir, td_truth;
  auto* td = app.add_subcommand("treedist", "Cluster information distance between Newick trees");
  td->add_option("trees", td_files);
  td->add_option("--dir", td_dir, "compare every .nwk file below a directory");
  td->add_option("--truth", td_truth, "reference tree");

  std::string x_model, x_out, x_data;
  int x_rank = 2, x_iters = 5000;
  std::uint64_t x_seed = 0;
  auto* ex = app.add_subcommand("extract", "Hidden Markov model of a nonnegative tree");
  ex->add_option("--model,-m", x_model)->required();
  ex->add_option("--rank", x_rank);
  ex->add_option("--out,-o", x_out)->required();
  ex->add_option("--data,-d", x_data, "dataset supplying site names");
  ex->add_option("--nmf-iters", x_iters);
  ex->add_option("--seed", x_seed);

  std::string c_data, c_out;
  auto* cl = app.add_subcommand("cluster", "Ward clustering of sites");
  cl->add_option("--data,-d", c_data)->required();
  cl->add_option("--out,-o", c_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(g);
    if (*tr) return cmd_train(t, args);
    if (*ev) return cmd_eval(e_model, e_data, e_format);
    if (*td) return cmd_treedist(td_files, td_dir, td_truth);
    if (*ex) return cmd_extract(x_model, x_rank, x_out, x_data, x_iters, x_seed);
    if (*cl) return cmd_cluster(c_data, c_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
