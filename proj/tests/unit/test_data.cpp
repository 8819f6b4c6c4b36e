#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ttree/data.hpp"
#include "ttree/error.hpp"

using namespace ttree;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto p = std::filesystem::temp_directory_path() / ("ttree_test_" + name);
  std::ofstream(p) << content;
  return p;
}

int sym(const Sample& s, int site) { return s.symbols()[site]; }

}  // namespace

TEST_CASE("random bits") {
  const Dataset d = gen_random_bits(10, 64, 1);
  CHECK(d.size() == 10);
  CHECK(d.num_sites() == 64);
  for (const auto& s : d.samples) CHECK(s.is_one_hot());
  CHECK_NOTHROW(d.validate());
  CHECK(gen_random_bits(10, 64, 1).checksum() == d.checksum());
  CHECK(gen_random_bits(10, 64, 2).checksum() != d.checksum());
  const Dataset one = gen_random_bits(1, 1, 4);
  CHECK(one.size() == 1);
  CHECK(one.site_dims == std::vector<int>{2});
}

TEST_CASE("long-range correlated bits") {
  const Dataset d = gen_lrcorr(50, 64, 3);
  for (const auto& s : d.samples) {
    const auto x = s.symbols();
    for (int i = 17; i < 48; ++i) CHECK(x[i] == x[16]);
  }
  const Dataset e = gen_lrcorr(50, 8, 3);
  for (const auto& s : e.samples)
    for (int i = 3; i < 6; ++i) CHECK(sym(s, i) == sym(s, 2));
  CHECK(empirical_mi(gen_lrcorr(20000, 8, 4), {2}, {5}) == doctest::Approx(std::log(2.0)).epsilon(0.02 / std::log(2.0)));
  CHECK(std::abs(empirical_mi(gen_lrcorr(20000, 8, 4), {0}, {7})) < 0.02);
  CHECK_THROWS_AS(gen_lrcorr(5, 7, 1), ConfigError);
}

TEST_CASE("bitwise sentences") {
  CHECK(gen_bitwise(BitOp::AND, 16, 1000, 1).num_sites() == 48);
  for (BitOp op : {BitOp::AND, BitOp::XOR}) {
    const Dataset d = gen_bitwise(op, 3, 500, 2);
    for (const auto& s : d.samples) {
      const auto x = s.symbols();
      for (int i = 0; i < 3; ++i) CHECK(x[6 + i] == (op == BitOp::AND ? (x[i] & x[3 + i]) : (x[i] ^ x[3 + i])));
    }
  }
  const Dataset x = gen_bitwise(BitOp::XOR, 2, 10000, 8);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(empirical_mi(x, {i}, {i + 2})) < 0.02);
    CHECK(std::abs(empirical_mi(x, {i}, {i + 4})) < 0.02);
    CHECK(std::abs(empirical_mi(x, {i + 2}, {i + 4})) < 0.02);
    CHECK(empirical_mi(x, {i, i + 2}, {i + 4}) == doctest::Approx(std::log(2.0)).epsilon(0.02 / std::log(2.0)));
  }
  CHECK(bitop_from_string("xor") == BitOp::XOR);
  CHECK_THROWS_AS(bitop_from_string("nand"), ConfigError);
  CHECK_THROWS_AS(gen_bitwise(BitOp::AND, 0, 10, 1), ConfigError);
}

TEST_CASE("branching Bayesian network") {
  const BayesNetSpec spec = make_bayesnet_spec(16, 0.8, 5);
  CHECK(spec.topology.num_sites == 16);
  CHECK(spec.topology.children.size() == 15);

  SUBCASE("perfect copying") {
    const BayesNetSpec s1 = make_bayesnet_spec(16, 1.0, 5);
    for (const auto& s : gen_bayesnet(s1, 200, 1).data.samples) {
      const auto x = s.symbols();
      for (int v : x) CHECK(v == x[0]);
    }
  }
  SUBCASE("coin flips") {
    const Dataset d = gen_bayesnet(make_bayesnet_spec(8, 0.5, 5), 100000, 2).data;
    for (int i = 1; i < 8; ++i) CHECK(std::abs(empirical_mi(d, {0}, {i})) < 0.02);
  }
  SUBCASE("siblings agree at p^2 + (1-p)^2 and share more information than distant leaves") {
    const BayesNetData g = gen_bayesnet(spec, 100000, 3);
    CHECK(g.truth.num_sites == 16);
    int a = -1, b = -1;
    for (const auto& c : g.truth.children)
      if (c[0].is_site() && c[1].is_site()) {
        a = c[0].index;
        b = c[1].index;
        break;
      }
    REQUIRE(a >= 0);
    double agree = 0.0;
    for (const auto& s : g.data.samples) agree += sym(s, a) == sym(s, b);
    CHECK(agree / g.data.size() == doctest::Approx(0.68).epsilon(0.01 / 0.68));
    // A leaf in the other half of the tree: its path runs through the root.
    const Topology& t = g.truth;
    std::vector<int> under_left;
    std::vector<NodeRef> stack = {t.children[t.root][0]};
    while (!stack.empty()) {
      NodeRef r = stack.back();
      stack.pop_back();
      if (r.is_site()) {
        under_left.push_back(r.index);
      } else {
        stack.push_back(t.children[r.index][0]);
        stack.push_back(t.children[r.index][1]);
      }
    }
    const bool a_left = std::count(under_left.begin(), under_left.end(), a) > 0;
    int far = -1;
    for (int s = 0; s < 16; ++s)
      if ((std::count(under_left.begin(), under_left.end(), s) > 0) != a_left) far = s;
    REQUIRE(far >= 0);
    CHECK(empirical_mi(g.data, {a}, {b}) > empirical_mi(g.data, {a}, {far}) + 0.01);
  }
  CHECK(gen_bayesnet(spec, 50, 9).data.checksum() == gen_bayesnet(spec, 50, 9).data.checksum());
}

TEST_CASE("FASTA ingestion") {
  const auto acgt = temp_file("acgt.fa", ">seq1 some description\nACGT\n");
  const Dataset d = ingest_fasta({acgt});
  CHECK(d.num_sites() == 1);
  CHECK(d.size() == 4);
  CHECK(d.site_dims == std::vector<int>{4});
  CHECK(sym(d.samples[0], 0) == 0);
  CHECK(sym(d.samples[1], 0) == 1);
  CHECK(sym(d.samples[2], 0) == 3);
  CHECK(sym(d.samples[3], 0) == 2);

  const auto amb = temp_file("amb.fa", ">a\nNR\n>b\nac\n");
  const Dataset e = ingest_fasta({amb});
  CHECK(e.num_sites() == 2);
  CHECK(e.samples[0].site_vectors[0] == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  CHECK(e.samples[1].site_vectors[0] == std::vector<double>{0.5, 0.0, 0.0, 0.5});
  CHECK(sym(e.samples[1], 1) == 1);

  std::vector<FastaRecord> recs;
  std::string seq;
  for (int i = 0; i < 1140; ++i) seq += "ACTG"[(i * 7) % 4];
  for (int k = 0; k < 16; ++k) recs.push_back({"org" + std::to_string(k), seq});
  const auto many = std::filesystem::temp_directory_path() / "ttree_test_many.fa";
  write_fasta(recs, many);
  const Dataset m = ingest_fasta({many});
  CHECK(m.num_sites() == 16);
  CHECK(m.size() == 1140);
  CHECK(m.site_label(3) == "org3");

  CHECK_THROWS_AS(ingest_fasta({temp_file("uneq.fa", ">a\nACG\n>b\nAC\n")}), ConfigError);
  CHECK_THROWS_AS(ingest_fasta({temp_file("empty.fa", "")}), IoError);
  CHECK_THROWS_AS(ingest_fasta({temp_file("bad.fa", ">a\nAXG\n")}), ConfigError);
  CHECK_THROWS_AS(ingest_fasta({std::filesystem::path("/nonexistent/x.fa")}), IoError);
}

TEST_CASE("dataset files round-trip") {
  Dataset d = gen_bitwise(BitOp::AND, 2, 7, 3);
  d.samples[2].weight = 2.5;
  d.site_names = {"a", "b", "c", "d", "e", "f"};
  std::stringstream ss;
  write_dataset(d, ss);
  const Dataset r = read_dataset(ss);
  CHECK(r.checksum() == d.checksum());
  CHECK(r.site_names == d.site_names);

  const auto acgt = temp_file("amb2.fa", ">a\nNA\n");
  const Dataset v = ingest_fasta({acgt});
  std::stringstream sv;
  write_dataset(v, sv);
  CHECK(read_dataset(sv).checksum() == v.checksum());

  std::stringstream bad("not a dataset\n0 1\n");
  CHECK_THROWS_AS(read_dataset(bad), IoError);
  std::stringstream short_row("ttdata v1 sites=3 dims=2,2,2 encoding=symbols\n0 1\n");
  CHECK_THROWS_AS(read_dataset(short_row), IoError);
  CHECK_THROWS_AS(read_dataset(std::filesystem::path("/nonexistent/d.txt")), IoError);
}

TEST_CASE("empirical entropy") {
  const Dataset d = dataset_from_symbols({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, 2);
  CHECK(empirical_entropy(d) == doctest::Approx(std::log(4.0)));
  CHECK(empirical_entropy(d, {1}) == doctest::Approx(std::log(2.0)));
  CHECK(empirical_mi(d, {0}, {1}) == doctest::Approx(0.0));
}
