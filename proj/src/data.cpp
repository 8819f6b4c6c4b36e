#include "ttree/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "ttree/error.hpp"
#include "ttree/rng.hpp"

namespace ttree {

namespace {

void require_positive(int v, const char* what) {
  if (v < 1) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace

Dataset gen_random_bits(int n_samples, int length, std::uint64_t seed) {
  require_positive(n_samples, "sample count");
  require_positive(length, "length");
  Rng rng = make_rng(seed, "dataset");
  std::bernoulli_distribution bit(0.5);
  std::vector<std::vector<int>> rows(n_samples, std::vector<int>(length));
  for (auto& r : rows)
    for (int& b : r) b = bit(rng);
  return dataset_from_symbols(rows, 2, "01");
}

Dataset gen_lrcorr(int n_samples, int length, std::uint64_t seed) {
  require_positive(n_samples, "sample count");
  if (length < 2 || length % 2 != 0) throw ConfigError("lrcorr length must be even");
  Rng rng = make_rng(seed, "dataset");
  std::bernoulli_distribution bit(0.5);
  const int q = length / 4;
  std::vector<std::vector<int>> rows(n_samples, std::vector<int>(length));
  for (auto& r : rows) {
    const int mid = bit(rng);
    for (int i = 0; i < length; ++i) r[i] = (i >= q && i < length - q) ? mid : static_cast<int>(bit(rng));
  }
  return dataset_from_symbols(rows, 2, "01");
}

BitOp bitop_from_string(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "and") return BitOp::AND;
  if (s == "xor") return BitOp::XOR;
  throw ConfigError("unknown bitwise operation: " + name);
}

Dataset gen_bitwise(BitOp op, int l_op, int n_samples, std::uint64_t seed) {
  require_positive(l_op, "l_op");
  require_positive(n_samples, "sample count");
  Rng rng = make_rng(seed, "dataset");
  std::bernoulli_distribution bit(0.5);
  std::vector<std::vector<int>> rows(n_samples, std::vector<int>(3 * l_op));
  for (auto& r : rows) {
    for (int i = 0; i < 2 * l_op; ++i) r[i] = bit(rng);
    for (int i = 0; i < l_op; ++i) r[2 * l_op + i] = op == BitOp::AND ? (r[i] & r[l_op + i]) : (r[i] ^ r[l_op + i]);
  }
  return dataset_from_symbols(rows, 2, "01");
}

Topology random_split_topology(int num_leaves, Rng& rng) {
  if (num_leaves < 2) throw ConfigError("a binary topology needs at least 2 leaves");
  Topology t;
  t.num_sites = num_leaves;
  t.root = 0;
  t.children.push_back({NodeRef::site(-1), NodeRef::site(-1)});
  std::vector<std::pair<int, int>> slots{{0, 0}, {0, 1}};
  while (static_cast<int>(slots.size()) < num_leaves) {
    std::uniform_int_distribution<std::size_t> pick(0, slots.size() - 1);
    const std::size_t k = pick(rng);
    const auto [node, side] = slots[k];
    const int id = static_cast<int>(t.children.size());
    t.children.push_back({NodeRef::site(-1), NodeRef::site(-1)});
    t.children[node][side] = NodeRef::tensor(id);
    slots[k] = {id, 0};
    slots.emplace_back(id, 1);
  }
  std::vector<int> labels(num_leaves);
  for (int i = 0; i < num_leaves; ++i) labels[i] = i;
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < slots.size(); ++i) t.children[slots[i].first][slots[i].second] = NodeRef::site(labels[i]);
  return t;
}

Eigen::MatrixXd keep_transition(int states, double p_keep) {
  require_positive(states, "state count");
  if (!(p_keep >= 0.0 && p_keep <= 1.0)) throw ConfigError("p_keep must lie in [0, 1]");
  if (states == 1) return Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(states, states, (1.0 - p_keep) / (states - 1));
  m.diagonal().setConstant(p_keep);
  return m;
}

Dataset sample_tree_hmm(const TreeHmm& hmm, int n_samples, std::uint64_t seed) {
  require_positive(n_samples, "sample count");
  const int k = static_cast<int>(hmm.transition.rows());
  if (hmm.transition.cols() != k || hmm.root_distribution.size() != k) {
    throw ConfigError("tree HMM matrices have inconsistent sizes");
  }
  Rng rng = make_rng(seed, "dataset");
  std::discrete_distribution<int> root(hmm.root_distribution.data(), hmm.root_distribution.data() + k);
  std::vector<std::discrete_distribution<int>> step;
  for (int p = 0; p < k; ++p) {
    const Eigen::VectorXd col = hmm.transition.col(p);
    step.emplace_back(col.data(), col.data() + k);
  }
  const Topology& topo = hmm.topology;
  std::vector<std::vector<int>> rows(n_samples, std::vector<int>(topo.num_sites));
  std::vector<int> state(topo.children.size());
  for (auto& row : rows) {
    std::vector<int> stack{topo.root};
    state[topo.root] = root(rng);
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      for (NodeRef c : topo.children[n]) {
        const int s = step[state[n]](rng);
        if (c.is_site()) {
          row[c.index] = s;
        } else {
          state[c.index] = s;
          stack.push_back(c.index);
        }
      }
    }
  }
  return dataset_from_symbols(rows, k, hmm.alphabet);
}

BayesNetSpec make_bayesnet_spec(int num_visible, double p_keep, std::uint64_t seed) {
  BayesNetSpec spec;
  spec.num_visible = num_visible;
  spec.p_keep = p_keep;
  spec.seed = seed;
  Rng rng = make_rng(seed, "topology");
  spec.topology = random_split_topology(num_visible, rng);
  return spec;
}

BayesNetData gen_bayesnet(const BayesNetSpec& spec, int n_samples, std::uint64_t seed) {
  if (spec.topology.num_sites != spec.num_visible) throw ConfigError("BayesNet topology does not match num_visible");
  TreeHmm hmm;
  hmm.topology = spec.topology;
  hmm.root_distribution = Eigen::VectorXd::Constant(2, 0.5);
  hmm.transition = keep_transition(2, spec.p_keep);
  hmm.alphabet = "01";
  return {sample_tree_hmm(hmm, n_samples, seed), spec.topology};
}

std::string topology_newick(const Topology& topo, const Dataset* data) {
  std::function<std::string(NodeRef)> rec = [&](NodeRef r) -> std::string {
    if (r.is_site()) return data ? data->site_label(r.index) : std::to_string(r.index);
    const auto& c = topo.children[r.index];
    return "(" + rec(c[0]) + "," + rec(c[1]) + ")";
  };
  return rec(NodeRef::tensor(topo.root)) + ";";
}

std::vector<FastaRecord> read_fasta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<FastaRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == ';') continue;
    if (line[0] == '>') {
      std::istringstream hs(line.substr(1));
      FastaRecord r;
      hs >> r.name;
      records.push_back(std::move(r));
      continue;
    }
    if (records.empty()) throw IoError(path.string() + ": sequence data before the first header");
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) records.back().sequence.push_back(static_cast<char>(std::toupper(c)));
  }
  if (records.empty()) throw IoError(path.string() + ": no FASTA records");
  return records;
}

void write_fasta(const std::vector<FastaRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) {
    out << '>' << r.name << '\n';
    for (std::size_t i = 0; i < r.sequence.size(); i += 60) out << r.sequence.substr(i, 60) << '\n';
  }
}

namespace {

// Bases compatible with a nucleotide code, as indices into "ACTG".
std::vector<int> compatible_bases(char c) {
  switch (c) {
    case 'A': return {0};
    case 'C': return {1};
    case 'T': case 'U': return {2};
    case 'G': return {3};
    case 'R': return {0, 3};
    case 'Y': return {1, 2};
    case 'S': return {1, 3};
    case 'W': return {0, 2};
    case 'K': return {2, 3};
    case 'M': return {0, 1};
    case 'B': return {1, 2, 3};
    case 'D': return {0, 2, 3};
    case 'H': return {0, 1, 2};
    case 'V': return {0, 1, 3};
    case 'N': case '-': case '?': case '.': return {0, 1, 2, 3};
    default: return {};
  }
}

}  // namespace

Dataset dataset_from_fasta(const std::vector<FastaRecord>& records) {
  if (records.empty()) throw ConfigError("no sequences");
  const std::size_t len = records.front().sequence.size();
  if (len == 0) throw ConfigError("sequence " + records.front().name + " is empty");
  for (const auto& r : records)
    if (r.sequence.size() != len) {
      throw ConfigError("sequence " + r.name + " has length " + std::to_string(r.sequence.size()) +
                        ", expected " + std::to_string(len) + " (alignment required)");
    }
  Dataset ds;
  ds.alphabet = "ACTG";
  ds.site_dims.assign(records.size(), 4);
  for (const auto& r : records) ds.site_names.push_back(r.name);
  ds.samples.resize(len);
  for (std::size_t col = 0; col < len; ++col) {
    Sample& s = ds.samples[col];
    s.site_vectors.assign(records.size(), std::vector<double>(4, 0.0));
    for (std::size_t site = 0; site < records.size(); ++site) {
      const char c = records[site].sequence[col];
      const auto bases = compatible_bases(c);
      if (bases.empty()) {
        throw ConfigError(std::string("unknown nucleotide symbol '") + c + "' in sequence " + records[site].name);
      }
      for (int b : bases) s.site_vectors[site][b] = 1.0 / static_cast<double>(bases.size());
    }
  }
  return ds;
}

Dataset ingest_fasta(const std::vector<std::filesystem::path>& paths) {
  std::vector<FastaRecord> all;
  for (const auto& p : paths) {
    auto recs = read_fasta(p);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  return dataset_from_fasta(all);
}

void write_dataset(const Dataset& data, std::ostream& out) {
  bool symbols = true;
  for (const auto& s : data.samples)
    if (!s.is_one_hot()) {
      symbols = false;
      break;
    }
  out << "ttdata v1 sites=" << data.num_sites() << " dims=";
  for (int i = 0; i < data.num_sites(); ++i) out << (i ? "," : "") << data.site_dims[i];
  if (!data.alphabet.empty()) out << " alphabet=" << data.alphabet;
  if (!data.site_names.empty()) {
    out << " names=";
    for (std::size_t i = 0; i < data.site_names.size(); ++i) out << (i ? "," : "") << data.site_names[i];
  }
  out << " encoding=" << (symbols ? "symbols" : "vectors") << '\n';
  out << std::setprecision(17);
  for (const auto& s : data.samples) {
    if (symbols) {
      const auto sym = s.symbols();
      for (std::size_t i = 0; i < sym.size(); ++i) out << (i ? " " : "") << sym[i];
    } else {
      for (std::size_t i = 0; i < s.site_vectors.size(); ++i) {
        out << (i ? " " : "");
        for (std::size_t k = 0; k < s.site_vectors[i].size(); ++k) out << (k ? "," : "") << s.site_vectors[i][k];
      }
    }
    if (s.weight != 1.0) out << " w=" << s.weight;
    out << '\n';
  }
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_dataset(data, out);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty dataset file");
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "ttdata" || version != "v1") throw IoError("not a ttdata v1 file");
  Dataset ds;
  int sites = -1;
  std::string encoding = "symbols";
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw IoError("bad header field " + kv);
    const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "sites") {
      sites = static_cast<int>(parse_double(val, 1));
    } else if (key == "dims") {
      for (const auto& d : split(val, ',')) ds.site_dims.push_back(static_cast<int>(parse_double(d, 1)));
    } else if (key == "alphabet") {
      ds.alphabet = val;
    } else if (key == "names") {
      ds.site_names = split(val, ',');
    } else if (key == "encoding") {
      encoding = val;
    }
  }
  if (sites < 1 || static_cast<int>(ds.site_dims.size()) != sites) throw IoError("header sites/dims disagree");
  if (encoding != "symbols" && encoding != "vectors") throw IoError("unknown encoding " + encoding);

  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string f;
    double weight = 1.0;
    while (ls >> f) {
      if (f.rfind("w=", 0) == 0) {
        weight = parse_double(f.substr(2), lineno);
      } else {
        fields.push_back(f);
      }
    }
    if (static_cast<int>(fields.size()) != sites) {
      throw IoError("line " + std::to_string(lineno) + ": expected " + std::to_string(sites) + " sites, got " +
                    std::to_string(fields.size()));
    }
    if (encoding == "symbols") {
      std::vector<int> sym;
      for (const auto& x : fields) sym.push_back(static_cast<int>(parse_double(x, lineno)));
      try {
        ds.samples.push_back(one_hot_sample(sym, ds.site_dims, weight));
      } catch (const ConfigError& e) {
        throw IoError("line " + std::to_string(lineno) + ": " + e.what());
      }
    } else {
      Sample s;
      s.weight = weight;
      for (const auto& x : fields) {
        std::vector<double> v;
        for (const auto& c : split(x, ',')) v.push_back(parse_double(c, lineno));
        s.site_vectors.push_back(std::move(v));
      }
      ds.samples.push_back(std::move(s));
    }
  }
  try {
    ds.validate();
  } catch (const ConfigError& e) {
    throw IoError(e.what());
  }
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_dataset(in);
}

double empirical_entropy(const Dataset& data, const std::vector<int>& sites) {
  std::vector<int> use = sites;
  if (use.empty())
    for (int i = 0; i < data.num_sites(); ++i) use.push_back(i);
  std::map<std::vector<int>, double> counts;
  double total = 0.0;
  std::vector<int> key(use.size());
  for (const auto& s : data.samples) {
    const auto sym = s.symbols();
    for (std::size_t i = 0; i < use.size(); ++i) {
      key[i] = sym[use[i]];
      if (key[i] < 0) throw ConfigError("empirical entropy needs one-hot samples");
    }
    counts[key] += s.weight;
    total += s.weight;
  }
  double h = 0.0;
  for (const auto& [k, c] : counts) {
    const double p = c / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double empirical_mi(const Dataset& data, const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  return empirical_entropy(data, a) + empirical_entropy(data, b) - empirical_entropy(data, ab);
}

}  // namespace ttree
