#include "ttree/factor.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "ttree/error.hpp"
#include "ttree/rng.hpp"

namespace ttree {

namespace {

void require_nonnegative(const Eigen::MatrixXd& v) {
  if (v.size() > 0 && !(v.minCoeff() >= 0.0)) throw ConfigError("matrix has negative entries");
}

double kl_term(double v, double q) {
  if (v == 0.0) return q;
  if (q <= 0.0) return std::numeric_limits<double>::infinity();
  return q - v + v * std::log(v / q);
}

}  // namespace

ThinSvd thin_svd(const Eigen::MatrixXd& m, bool vectors) {
  const int opts = vectors ? Eigen::ComputeThinU | Eigen::ComputeThinV : 0;
  auto finite = [&](const auto& svd) {
    return svd.singularValues().allFinite() &&
           (!vectors || (svd.matrixU().allFinite() && svd.matrixV().allFinite()));
  };
  auto pack = [&](const auto& svd) {
    ThinSvd r;
    r.s = svd.singularValues();
    if (vectors) {
      r.u = svd.matrixU();
      r.v = svd.matrixV();
    }
    return r;
  };
  Eigen::BDCSVD<Eigen::MatrixXd> bdc(m, opts);
  if (finite(bdc)) return pack(bdc);
  Eigen::JacobiSVD<Eigen::MatrixXd> jac(m, opts);
  if (finite(jac)) return pack(jac);
  throw NumericalError("SVD returned non-finite values");
}

double kl_divergence(const Eigen::MatrixXd& v, const Eigen::MatrixXd& wh) {
  if (v.rows() != wh.rows() || v.cols() != wh.cols()) throw ConfigError("KL shape mismatch");
  require_nonnegative(v);
  require_nonnegative(wh);
  double total = 0.0;
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    for (Eigen::Index i = 0; i < v.rows(); ++i) total += kl_term(v(i, j), wh(i, j));
  return total;
}

double kl_divergence(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, const Eigen::MatrixXd& h) {
  if (w.cols() != h.rows()) throw ConfigError("factor shapes are not conformable");
  require_nonnegative(w);
  require_nonnegative(h);
  return kl_divergence(v, w * h);
}

double kl_divergence(const Tensor& v, const Tensor& approx) {
  if (!v.same_shape(approx)) throw ConfigError("KL shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) total += kl_term(v[i], approx[i]);
  return total;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> nndsvd_init(const Eigen::MatrixXd& v, int rank) {
  require_nonnegative(v);
  const int m = static_cast<int>(v.rows()), n = static_cast<int>(v.cols());
  if (rank < 1 || rank > std::min(m, n)) {
    throw ConfigError("NNDSVD rank " + std::to_string(rank) + " exceeds matrix dimensions");
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, rank);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rank, n);
  if (v.isZero(0.0)) return {w, h};

  const ThinSvd svd = thin_svd(v);
  const auto& u = svd.u;
  const auto& vv = svd.v;
  const auto& s = svd.s;

  w.col(0) = std::sqrt(s[0]) * u.col(0).cwiseAbs();
  h.row(0) = std::sqrt(s[0]) * vv.col(0).cwiseAbs().transpose();
  for (int j = 1; j < rank; ++j) {
    const Eigen::VectorXd x = u.col(j), y = vv.col(j);
    const Eigen::VectorXd xp = x.cwiseMax(0.0), xn = (-x).cwiseMax(0.0);
    const Eigen::VectorXd yp = y.cwiseMax(0.0), yn = (-y).cwiseMax(0.0);
    const double mp = xp.norm() * yp.norm();
    const double mn = xn.norm() * yn.norm();
    if (mp == 0.0 && mn == 0.0) continue;
    if (mp >= mn) {
      const double c = std::sqrt(s[j] * mp);
      w.col(j) = c * xp / xp.norm();
      h.row(j) = c * (yp / yp.norm()).transpose();
    } else {
      const double c = std::sqrt(s[j] * mn);
      w.col(j) = c * xn / xn.norm();
      h.row(j) = c * (yn / yn.norm()).transpose();
    }
  }

  const double fill = 1e-12 * v.mean();
  const Eigen::VectorXd row_sums = v.rowwise().sum();
  const Eigen::RowVectorXd col_sums = v.colwise().sum();
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < rank; ++r)
      w(i, r) = row_sums[i] == 0.0 ? 0.0 : (w(i, r) == 0.0 ? fill : w(i, r));
  for (int r = 0; r < rank; ++r)
    for (int j = 0; j < n; ++j)
      h(r, j) = col_sums[j] == 0.0 ? 0.0 : (h(r, j) == 0.0 ? fill : h(r, j));
  return {w, h};
}

NMFResult nmf_mu_kl(const Eigen::MatrixXd& v, int rank, const NMFConfig& config) {
  if (config.max_iters < 1 || !(config.rel_tol > 0.0) || !(config.floor > 0.0)) {
    throw ConfigError("invalid NMF configuration");
  }
  NMFResult res;
  if (v.isZero(0.0)) {
    res.w = Eigen::MatrixXd::Zero(v.rows(), rank);
    res.h = Eigen::MatrixXd::Zero(rank, v.cols());
    res.kl_history.push_back(0.0);
    return res;
  }
  std::tie(res.w, res.h) = nndsvd_init(v, rank);
  Eigen::MatrixXd& w = res.w;
  Eigen::MatrixXd& h = res.h;
  const double fl = config.floor;

  Eigen::MatrixXd wh = w * h;
  double prev = kl_divergence(v, wh.cwiseMax(fl));
  res.kl_history.push_back(prev);
  Eigen::MatrixXd q;
  for (int it = 0; it < config.max_iters; ++it) {
    q = v.cwiseQuotient(wh.cwiseMax(fl));
    const Eigen::RowVectorXd wsum = w.colwise().sum().cwiseMax(fl);
    h.array() *= (w.transpose() * q).array().colwise() / wsum.transpose().array();
    wh.noalias() = w * h;
    q = v.cwiseQuotient(wh.cwiseMax(fl));
    const Eigen::VectorXd hsum = h.rowwise().sum().cwiseMax(fl);
    w.array() *= (q * h.transpose()).array().rowwise() / hsum.transpose().array();
    wh.noalias() = w * h;
    const double cur = kl_divergence(v, wh.cwiseMax(fl));
    res.kl_history.push_back(cur);
    res.iterations = it + 1;
    if (!std::isfinite(cur)) throw NumericalError("NMF diverged");
    if (prev - cur <= config.rel_tol * std::max(prev, 1e-300)) break;
    prev = cur;
  }
  return res;
}

const char* to_string(Pairing p) {
  switch (p) {
    case Pairing::IJ_KL: return "ij|kl";
    case Pairing::IK_JL: return "ik|jl";
    case Pairing::IL_JK: return "il|jk";
  }
  return "?";
}

std::array<int, 3> pairing_axes(Pairing p) {
  switch (p) {
    case Pairing::IJ_KL: return {0, 1, 2};
    case Pairing::IK_JL: return {0, 2, 1};
    case Pairing::IL_JK: return {1, 2, 0};
  }
  return {0, 1, 2};
}

int split_bond_dim(const Tensor& fused, Pairing pairing, int chi_max) {
  if (fused.rank() != 4) throw ConfigError("fused tensor must have rank 4");
  const auto ax = pairing_axes(pairing);
  const int rows = fused.dim(ax[0]) * fused.dim(ax[1]);
  const int cols = fused.dim(ax[2]) * fused.dim(3);
  return std::min({rows, cols, chi_max});
}

Eigen::MatrixXd pairing_matrix(const Tensor& fused, Pairing pairing) {
  if (fused.rank() != 4) throw ConfigError("fused tensor must have rank 4");
  const auto ax = pairing_axes(pairing);
  int rows = 0, cols = 0;
  const auto flat = matricize(fused, {ax[0], ax[1]}, rows, cols);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = flat[static_cast<std::size_t>(i) * cols + j];
  return m;
}

namespace {

FactorPair to_pair(const Tensor& fused, Pairing pairing, const Eigen::MatrixXd& w,
                   const Eigen::MatrixXd& h) {
  const auto ax = pairing_axes(pairing);
  const int k = static_cast<int>(w.cols());
  const int d1 = fused.dim(ax[0]), d2 = fused.dim(ax[1]), ds = fused.dim(ax[2]), du = fused.dim(3);
  FactorPair p;
  p.bond_dim = k;
  p.left = Tensor({d1, d2, k});
  p.right = Tensor({k, ds, du});
  for (int a = 0; a < d1; ++a)
    for (int b = 0; b < d2; ++b)
      for (int m = 0; m < k; ++m) p.left(a, b, m) = w(a * d2 + b, m);
  for (int m = 0; m < k; ++m)
    for (int s = 0; s < ds; ++s)
      for (int u = 0; u < du; ++u) p.right(m, s, u) = h(m, s * du + u);
  return p;
}

}  // namespace

FactorPair split_nonneg(const Tensor& fused, Pairing pairing, int chi_max, const NMFConfig& config) {
  if (!fused.nonnegative()) throw ConfigError("nonnegative split of a tensor with negative entries");
  const int k = split_bond_dim(fused, pairing, chi_max);
  const Eigen::MatrixXd v = pairing_matrix(fused, pairing);
  const NMFResult r = nmf_mu_kl(v, k, config);
  FactorPair p = to_pair(fused, pairing, r.w, r.h);
  p.error = r.kl();
  return p;
}

FactorPair split_svd(const Tensor& fused, Pairing pairing, int chi_max) {
  const int k = split_bond_dim(fused, pairing, chi_max);
  const Eigen::MatrixXd v = pairing_matrix(fused, pairing);
  const ThinSvd svd = thin_svd(v);
  const Eigen::VectorXd root = svd.s.head(k).cwiseSqrt();
  const Eigen::MatrixXd w = svd.u.leftCols(k) * root.asDiagonal();
  const Eigen::MatrixXd h = root.asDiagonal() * svd.v.leftCols(k).transpose();
  FactorPair p = to_pair(fused, pairing, w, h);
  p.error = (v - w * h).norm();
  return p;
}

Tensor recombine(const FactorPair& pair, Pairing pairing) {
  const auto ax = pairing_axes(pairing);
  const Tensor& a = pair.left;
  const Tensor& b = pair.right;
  std::vector<int> shape(4);
  shape[ax[0]] = a.dim(0);
  shape[ax[1]] = a.dim(1);
  shape[ax[2]] = b.dim(1);
  shape[3] = b.dim(2);
  Tensor f(shape);
  int idx[4];
  for (int p1 = 0; p1 < a.dim(0); ++p1)
    for (int p2 = 0; p2 < a.dim(1); ++p2)
      for (int o = 0; o < b.dim(1); ++o)
        for (int u = 0; u < b.dim(2); ++u) {
          double acc = 0.0;
          for (int m = 0; m < pair.bond_dim; ++m) acc += a(p1, p2, m) * b(m, o, u);
          idx[ax[0]] = p1;
          idx[ax[1]] = p2;
          idx[ax[2]] = o;
          idx[3] = u;
          f(idx[0], idx[1], idx[2], idx[3]) = acc;
        }
  return f;
}

Tensor CPDecomposition::reconstruct() const {
  const auto& a = factors[0];
  const auto& b = factors[1];
  const auto& c = factors[2];
  Tensor t({static_cast<int>(a.rows()), static_cast<int>(b.rows()), static_cast<int>(c.rows())});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j)
      for (int k = 0; k < c.rows(); ++k) {
        double acc = 0.0;
        for (int r = 0; r < rank; ++r) acc += scale[r] * a(i, r) * b(j, r) * c(k, r);
        t(i, j, k) = acc;
      }
  return t;
}

namespace {

Tensor cp_full(const std::array<Eigen::MatrixXd, 3>& f) {
  CPDecomposition d;
  d.rank = static_cast<int>(f[0].cols());
  d.factors = f;
  d.scale = Eigen::VectorXd::Ones(d.rank);
  return d.reconstruct();
}

Eigen::MatrixXd unfold(const Tensor& t, int mode) {
  int rows = 0, cols = 0;
  const auto flat = matricize(t, {mode}, rows, cols);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = flat[static_cast<std::size_t>(i) * cols + j];
  return m;
}

// One KL multiplicative update of factor `mode`.
void cp_update(const Tensor& x, std::array<Eigen::MatrixXd, 3>& f, int mode, double floor) {
  const Tensor approx = cp_full(f);
  const int rank = static_cast<int>(f[0].cols());
  const int d0 = x.dim(0), d1 = x.dim(1), d2 = x.dim(2);
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(x.dim(mode), rank);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(rank);
  for (int i = 0; i < d0; ++i)
    for (int j = 0; j < d1; ++j)
      for (int k = 0; k < d2; ++k) {
        const double q = x(i, j, k) / std::max(approx(i, j, k), floor);
        const int idx[3] = {i, j, k};
        for (int r = 0; r < rank; ++r) {
          double other = 1.0;
          for (int n = 0; n < 3; ++n)
            if (n != mode) other *= f[n](idx[n], r);
          num(idx[mode], r) += q * other;
        }
      }
  for (int r = 0; r < rank; ++r) {
    double prod = 1.0;
    for (int n = 0; n < 3; ++n)
      if (n != mode) prod *= f[n].col(r).sum();
    den[r] = std::max(prod, floor);
  }
  for (int a = 0; a < f[mode].rows(); ++a)
    for (int r = 0; r < rank; ++r) f[mode](a, r) *= num(a, r) / den[r];
}

// Moves the column scale of modes 1 and 2 into mode 0 so the factors stay bounded.
void balance(std::array<Eigen::MatrixXd, 3>& f) {
  for (int r = 0; r < f[0].cols(); ++r) {
    for (int n = 1; n < 3; ++n) {
      const double s = f[n].col(r).sum();
      if (s > 0.0) {
        f[n].col(r) /= s;
        f[0].col(r) *= s;
      }
    }
  }
}

}  // namespace

CPDecomposition nncpd(const Tensor& t, int rank, const NMFConfig& config, int restarts,
                      std::uint64_t seed) {
  if (rank < 1) throw ConfigError("CP rank must be at least 1");
  if (t.rank() != 3) throw ConfigError("NNCPD needs a rank-3 tensor");
  if (!t.nonnegative()) throw ConfigError("NNCPD of a tensor with negative entries");
  Rng rng = make_rng(seed, "nmf");
  std::uniform_real_distribution<double> unif(0.1, 1.0);

  CPDecomposition best;
  best.kl = std::numeric_limits<double>::infinity();
  const double mean = t.sum() / static_cast<double>(t.size());
  for (int attempt = 0; attempt < std::max(1, restarts); ++attempt) {
    std::array<Eigen::MatrixXd, 3> f;
    for (int n = 0; n < 3; ++n) {
      const Eigen::MatrixXd x = unfold(t, n);
      if (attempt == 0 && rank <= std::min(x.rows(), x.cols()) && mean > 0.0) {
        f[n] = nndsvd_init(x, rank).first;
        for (int r = 0; r < rank; ++r)
          for (int a = 0; a < f[n].rows(); ++a)
            if (f[n](a, r) <= 0.0 && x.row(a).sum() > 0.0) f[n](a, r) = 1e-3;
      } else {
        f[n].resize(t.dim(n), rank);
        for (int a = 0; a < f[n].rows(); ++a)
          for (int r = 0; r < rank; ++r) f[n](a, r) = unif(rng);
      }
    }
    // Match the overall mass before iterating.
    const double s = cp_full(f).sum();
    if (s > 0.0) f[0] *= t.sum() / s;

    std::vector<double> hist{kl_divergence(t, cp_full(f))};
    double prev = hist.back();
    for (int it = 0; it < config.max_iters; ++it) {
      for (int n = 0; n < 3; ++n) cp_update(t, f, n, config.floor);
      balance(f);
      const double cur = kl_divergence(t, cp_full(f));
      hist.push_back(cur);
      if (prev - cur <= config.rel_tol * std::max(prev, 1e-300)) break;
      prev = cur;
    }
    if (hist.back() < best.kl) {
      best.kl = hist.back();
      best.kl_history = std::move(hist);
      best.factors = f;
    }
  }

  best.rank = rank;
  best.scale = Eigen::VectorXd::Ones(rank);
  for (int n = 0; n < 3; ++n) {
    for (int r = 0; r < rank; ++r) {
      const double s = best.factors[n].col(r).sum();
      if (s > 0.0) {
        best.factors[n].col(r) /= s;
        best.scale[r] *= s;
      } else {
        best.scale[r] = 0.0;
      }
    }
  }
  return best;
}

}  // namespace ttree
