#include "sparse4d/sparse_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "sparse4d/error.hpp"
#include "sparse4d/random.hpp"
#include "sparse4d/table_io.hpp"

namespace sparse4d {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// --- dictionary -----------------------------------------------------------

Dictionary::Dictionary(MatrixXd atoms) : atoms_(std::move(atoms)) {
  if (atoms_.cols() <= atoms_.rows()) throw InvalidArgument("dictionary must be overcomplete (Q > P)");
  if (!atoms_.allFinite()) throw InvalidArgument("dictionary has non-finite entries");
  for (Index j = 0; j < atoms_.cols(); ++j)
    if (std::abs(atoms_.col(j).norm() - 1.0) > 1e-12)
      throw InvalidArgument("dictionary column " + std::to_string(j) + " is not unit norm");
}

namespace {

int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

/// Haar wavelet of support length `len` starting at `start` (circular).
VectorXd haar_wavelet(int n, int len, int start) {
  VectorXd v = VectorXd::Zero(n);
  const double a = 1.0 / std::sqrt(static_cast<double>(len));
  for (int i = 0; i < len; ++i) v((start + i) % n) = i < len / 2 ? a : -a;
  return v;
}

}  // namespace

Dictionary build_wavelet_dictionary(int feature_length, int overcompleteness) {
  if (feature_length < 4) throw InvalidArgument("feature length must be at least 4");
  if (overcompleteness < 2) throw InvalidArgument("overcompleteness must be at least 2");
  const int p = feature_length;
  const int q = p * overcompleteness;
  const int n = next_pow2(p);

  // Candidate atoms on length n, in order: orthonormal basis, then shifts.
  std::vector<VectorXd> candidates;
  candidates.push_back(VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
  for (int len = n; len >= 2; len /= 2)
    for (int start = 0; start < n; start += len) candidates.push_back(haar_wavelet(n, len, start));
  for (int len = 2; len <= n && static_cast<int>(candidates.size()) < q; len *= 2)
    for (int shift = 0; shift < n && static_cast<int>(candidates.size()) < q; ++shift)
      if (shift % len != 0) candidates.push_back(haar_wavelet(n, len, shift));

  Rng rng(derive_seed(0x5eedd1c7ULL, {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(q)}));
  auto random_atom = [&] {
    VectorXd v(p);
    for (Index i = 0; i < p; ++i) v(i) = rng.normal();
    return VectorXd(v / v.norm());
  };

  MatrixXd atoms(p, q);
  for (int j = 0; j < q; ++j) {
    VectorXd col;
    if (j < static_cast<int>(candidates.size())) col = candidates[static_cast<std::size_t>(j)].head(p);
    const double norm = col.size() ? col.norm() : 0.0;
    bool usable = norm > 1e-12;
    if (usable) {
      col /= norm;
      for (int k = 0; k < j && usable; ++k)
        if (std::abs(atoms.col(k).dot(col)) > 1.0 - 1e-9) usable = false;
    }
    while (!usable) {
      col = random_atom();
      usable = true;
      for (int k = 0; k < j && usable; ++k)
        if (std::abs(atoms.col(k).dot(col)) > 1.0 - 1e-9) usable = false;
    }
    atoms.col(j) = col / col.norm();
  }
  return Dictionary(std::move(atoms));
}

void save_dictionary_csv(const Dictionary& dict, const fs::path& path) {
  std::string out = std::to_string(dict.rows()) + "," + std::to_string(dict.cols()) + "\n";
  for (Index r = 0; r < dict.rows(); ++r) {
    for (Index c = 0; c < dict.cols(); ++c) {
      if (c) out += ',';
      out += format_double(dict.atoms()(r, c));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Dictionary load_dictionary_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw MalformedFile(path.string() + ": empty dictionary file");
  const auto head = split(trim(line), ',');
  if (head.size() != 2) throw MalformedFile(path.string() + ":1: expected `P,Q`");
  const auto p = parse_int(head[0], path.string() + ":1");
  const auto q = parse_int(head[1], path.string() + ":1");
  if (p <= 0 || q <= 0) throw MalformedFile(path.string() + ":1: bad dimensions");
  MatrixXd a(p, q);
  for (Index r = 0; r < p; ++r) {
    const std::string ctx = path.string() + ":" + std::to_string(r + 2);
    if (!std::getline(in, line)) throw MalformedFile(ctx + ": missing row");
    const auto fields = split(trim(line), ',');
    if (static_cast<Index>(fields.size()) != q) throw MalformedFile(ctx + ": wrong column count");
    for (Index c = 0; c < q; ++c) a(r, c) = parse_double(fields[static_cast<std::size_t>(c)], ctx);
  }
  return Dictionary(std::move(a));
}

// --- priors and per-support quantities ------------------------------------

void SparsePrior::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("prior p must lie in (0,1)");
  if (!(sigma2 > 0.0)) throw InvalidArgument("prior sigma2 must be positive");
}

SparsePrior default_prior(Index atom_count, const VectorXd& x, double sigma2_scale, double expected_sparsity) {
  SparsePrior prior;
  prior.p = std::min(expected_sparsity / static_cast<double>(atom_count), 0.5);
  prior.sigma2 = std::max(sigma2_scale * x.squaredNorm() / static_cast<double>(x.size()), 1e-12);
  return prior;
}

void validate_support(const Support& s, Index atom_count) {
  for (std::size_t i = 0; i < s.indices.size(); ++i) {
    if (s.indices[i] < 0 || s.indices[i] >= atom_count) throw InvalidArgument("support index out of range");
    if (i && s.indices[i] <= s.indices[i - 1]) throw InvalidArgument("support indices must be strictly increasing");
  }
}

MatrixXd support_columns(const Dictionary& dict, const Support& s) {
  validate_support(s, dict.cols());
  MatrixXd a(dict.rows(), static_cast<Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) a.col(static_cast<Index>(i)) = dict.atoms().col(s.indices[i]);
  return a;
}

namespace {

void require_full_rank(const MatrixXd& as) {
  if (as.cols() == 0) return;
  if (as.cols() > as.rows()) throw RankDeficientSupport("support larger than feature length");
  Eigen::JacobiSVD<MatrixXd> svd(as);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || sv(0) / smin > kMaxSupportCondition)
    throw RankDeficientSupport("support columns are (numerically) linearly dependent");
}

}  // namespace

VectorXd blue_estimate(const Dictionary& dict, const Support& s, const VectorXd& x) {
  if (x.size() != dict.rows()) throw ShapeMismatch("feature length does not match dictionary");
  const MatrixXd as = support_columns(dict, s);
  require_full_rank(as);
  if (as.cols() == 0) return VectorXd();
  return as.householderQr().solve(x);
}

MatrixXd complement_projector(const Dictionary& dict, const Support& s) {
  const MatrixXd as = support_columns(dict, s);
  require_full_rank(as);
  const Index p = dict.rows();
  MatrixXd z = MatrixXd::Identity(p, p);
  if (as.cols() == 0) return z;
  const MatrixXd gram = as.transpose() * as;
  z.noalias() -= as * gram.ldlt().solve(as.transpose());
  return z;
}

double support_log_prior(std::size_t support_size, const SparsePrior& prior, Index atom_count) {
  const auto k = static_cast<double>(support_size);
  return k * std::log(prior.p) + (static_cast<double>(atom_count) - k) * std::log1p(-prior.p);
}

double support_log_likelihood(const Dictionary& dict, const Support& s, const VectorXd& x,
                              const SparsePrior& prior) {
  if (x.size() != dict.rows()) throw ShapeMismatch("feature length does not match dictionary");
  const VectorXd r = complement_projector(dict, s) * x;
  return -r.squaredNorm() / (2.0 * prior.sigma2);
}

void SearchConfig::validate() const {
  if (max_support_size < 1) throw InvalidArgument("max_support_size must be >= 1");
  if (beam_width < 1) throw InvalidArgument("beam_width must be >= 1");
}

double support_count(Index atom_count, int max_support_size) {
  double total = 0.0, term = 1.0;
  const auto q = static_cast<double>(atom_count);
  for (int k = 0; k <= max_support_size && k <= atom_count; ++k) {
    total += term;
    term = term * (q - k) / (k + 1);
  }
  return total;
}

// --- incremental search ---------------------------------------------------

namespace {

/// Gram-Schmidt state for one support. Atoms are orthogonalized in insertion
/// order: A_order = U R with U orthonormal.
struct Node {
  std::vector<int> order;   // insertion order
  MatrixXd c;               // |S| x Q, rows u_i^T A
  VectorXd z;               // u_i^T x
  MatrixXd r;               // upper triangular
  VectorXd t;               // A^T (x - U U^T x)
  VectorXd d;               // |Z_S a_j|^2 per atom
  double residual2 = 0.0;   // |Z_S x|^2
  double log_posterior = 0.0;

  Support support() const {
    Support s{order};
    std::sort(s.indices.begin(), s.indices.end());
    return s;
  }
};

constexpr double kRankTolerance = 1e-12;

class Search {
 public:
  Search(const Dictionary& dict, const MatrixXd& gram, const VectorXd& x, const SparsePrior& prior)
      : dict_(dict), gram_(gram), x_(x), prior_(prior), q_(dict.cols()) {}

  Node root() const {
    Node n;
    n.c.resize(0, q_);
    n.z.resize(0);
    n.r.resize(0, 0);
    n.t = dict_.atoms().transpose() * x_;
    n.d = gram_.diagonal();
    n.residual2 = x_.squaredNorm();
    n.log_posterior = score(0, n.residual2);
    return n;
  }

  double score(std::size_t size, double residual2) const {
    return -std::max(residual2, 0.0) / (2.0 * prior_.sigma2) + support_log_prior(size, prior_, q_);
  }

  bool admissible(const Node& n, int atom) const {
    return n.d(atom) > kRankTolerance * gram_(atom, atom);
  }

  double candidate_residual2(const Node& n, int atom) const {
    return n.residual2 - n.t(atom) * n.t(atom) / n.d(atom);
  }

  Node extend(const Node& parent, int atom) const {
    const auto s = static_cast<Index>(parent.order.size());
    const double norm = std::sqrt(parent.d(atom));
    const VectorXd ck = parent.c.col(atom);
    Node n;
    n.order = parent.order;
    n.order.push_back(atom);
    n.c.resize(s + 1, q_);
    n.c.topRows(s) = parent.c;
    n.c.row(s) = (gram_.col(atom).transpose() - ck.transpose() * parent.c) / norm;
    n.z.resize(s + 1);
    n.z.head(s) = parent.z;
    n.z(s) = parent.t(atom) / norm;
    n.r = MatrixXd::Zero(s + 1, s + 1);
    n.r.topLeftCorner(s, s) = parent.r;
    n.r.col(s).head(s) = ck;
    n.r(s, s) = norm;
    n.t = parent.t - n.c.row(s).transpose() * n.z(s);
    n.d = parent.d - n.c.row(s).transpose().cwiseAbs2();
    n.residual2 = std::max(parent.residual2 - n.z(s) * n.z(s), 0.0);
    n.log_posterior = score(n.order.size(), n.residual2);
    return n;
  }

 private:
  const Dictionary& dict_;
  const MatrixXd& gram_;
  const VectorXd& x_;
  SparsePrior prior_;
  Index q_;
};

/// Compact record of a visited support: enough to produce its BLUE.
struct Visited {
  std::vector<int> order;
  MatrixXd r;
  VectorXd z;
  double log_posterior;
};

Visited compact(const Node& n) { return {n.order, n.r, n.z, n.log_posterior}; }

SparseEstimate finalize(const std::vector<Visited>& visited, Index q) {
  SparseEstimate est;
  est.h_hat = VectorXd::Zero(q);
  if (visited.empty()) {
    est.log_evidence = -std::numeric_limits<double>::infinity();
    return est;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : visited) best = std::max(best, v.log_posterior);
  double total = 0.0;
  for (const auto& v : visited) total += std::exp(v.log_posterior - best);
  est.log_evidence = best + std::log(total);
  est.supports.reserve(visited.size());
  for (const auto& v : visited) {
    const double w = std::exp(v.log_posterior - best) / total;
    Support s{v.order};
    std::sort(s.indices.begin(), s.indices.end());
    est.supports.push_back({std::move(s), v.log_posterior, w});
    if (!v.order.empty() && w != 0.0) {
      const VectorXd coef = v.r.triangularView<Eigen::Upper>().solve(v.z);
      for (std::size_t i = 0; i < v.order.size(); ++i) est.h_hat(v.order[i]) += w * coef(static_cast<Index>(i));
    }
  }
  return est;
}

void enumerate(const Search& search, const Node& node, int next_atom, int max_size, Index q,
               std::vector<Visited>& out) {
  out.push_back(compact(node));
  if (static_cast<int>(node.order.size()) >= max_size) return;
  for (int j = next_atom; j < q; ++j) {
    if (!search.admissible(node, j)) continue;
    enumerate(search, search.extend(node, j), j + 1, max_size, q, out);
  }
}

struct Candidate {
  double score;
  int parent;
  int atom;
};

std::vector<Visited> beam_search(const Search& search, Node root, int max_size, int width, Index q) {
  std::vector<Visited> visited;
  visited.push_back(compact(root));
  std::vector<Node> beam;
  beam.push_back(std::move(root));
  std::vector<Candidate> cands;
  for (int size = 1; size <= max_size && !beam.empty(); ++size) {
    cands.clear();
    for (int b = 0; b < static_cast<int>(beam.size()); ++b) {
      const Node& n = beam[static_cast<std::size_t>(b)];
      std::vector<char> used(static_cast<std::size_t>(q), 0);
      for (int a : n.order) used[static_cast<std::size_t>(a)] = 1;
      for (int j = 0; j < q; ++j) {
        if (used[static_cast<std::size_t>(j)] || !search.admissible(n, j)) continue;
        cands.push_back({search.score(static_cast<std::size_t>(size), search.candidate_residual2(n, j)), b, j});
      }
    }
    // A support of this size has at most `size` parents, so the best
    // width * size candidates contain every support that can be kept.
    const auto keep = std::min(cands.size(), static_cast<std::size_t>(width) * static_cast<std::size_t>(size));
    auto better = [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.atom < b.atom;
    };
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);
    std::set<std::vector<int>> seen;
    std::vector<Node> next;
    for (std::size_t i = 0; i < keep && static_cast<int>(next.size()) < width; ++i) {
      const auto& cand = cands[i];
      std::vector<int> key = beam[static_cast<std::size_t>(cand.parent)].order;
      key.push_back(cand.atom);
      std::sort(key.begin(), key.end());
      if (!seen.insert(std::move(key)).second) continue;
      next.push_back(search.extend(beam[static_cast<std::size_t>(cand.parent)], cand.atom));
      visited.push_back(compact(next.back()));
    }
    beam = std::move(next);
  }
  return visited;
}

}  // namespace

SparseCoder::SparseCoder(Dictionary dict) : dict_(std::move(dict)) {
  gram_.noalias() = dict_.atoms().transpose() * dict_.atoms();
}

SparseEstimate SparseCoder::estimate(const VectorXd& x, const SparsePrior& prior, const SearchConfig& cfg) const {
  cfg.validate();
  prior.validate();
  if (x.size() != dict_.rows()) throw ShapeMismatch("feature length does not match dictionary");
  const Index q = dict_.cols();
  Search search(dict_, gram_, x, prior);
  std::vector<Visited> visited;
  if (cfg.mode == SearchMode::exact) {
    if (support_count(q, cfg.max_support_size) > kMaxEnumeratedSupports)
      throw EnumerationTooLarge("exact enumeration would visit more than 1e6 supports");
    enumerate(search, search.root(), 0, cfg.max_support_size, q, visited);
  } else {
    visited = beam_search(search, search.root(), cfg.max_support_size, cfg.beam_width, q);
  }
  return finalize(visited, q);
}

SparseEstimate mmse_estimate(const Dictionary& dict, const VectorXd& x, const SparsePrior& prior,
                             const SearchConfig& cfg) {
  return SparseCoder(dict).estimate(x, prior, cfg);
}

// --- reference oracle -----------------------------------------------------

SparseEstimate exact_mmse_oracle(const Dictionary& dict, const VectorXd& x, const SparsePrior& prior,
                                 int max_support_size) {
  prior.validate();
  if (max_support_size < 0) throw InvalidArgument("max_support_size must be nonnegative");
  const Index q = dict.cols();
  if (support_count(q, max_support_size) > kMaxEnumeratedSupports)
    throw EnumerationTooLarge("oracle enumeration would visit more than 1e6 supports");

  struct Scored {
    Support support;
    VectorXd coef;
    double log_posterior;
  };
  std::vector<Scored> scored;
  for (int k = 0; k <= max_support_size && k <= q; ++k) {
    // Lexicographic k-combinations of {0..Q-1}.
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      Support s{idx};
      try {
        VectorXd coef = blue_estimate(dict, s, x);
        const double lp = support_log_likelihood(dict, s, x, prior) + support_log_prior(s.size(), prior, q);
        scored.push_back({std::move(s), std::move(coef), lp});
      } catch (const RankDeficientSupport&) {
        // excluded from the posterior mass
      }
      int i = k - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == q - k + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }

  SparseEstimate est;
  est.h_hat = VectorXd::Zero(q);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : scored) best = std::max(best, s.log_posterior);
  double total = 0.0;
  for (const auto& s : scored) total += std::exp(s.log_posterior - best);
  est.log_evidence = best + std::log(total);
  for (auto& s : scored) {
    const double w = std::exp(s.log_posterior - best) / total;
    for (std::size_t i = 0; i < s.support.size(); ++i)
      est.h_hat(s.support.indices[i]) += w * s.coef(static_cast<Index>(i));
    est.supports.push_back({std::move(s.support), s.log_posterior, w});
  }
  return est;
}

// --- reduction to fixed-length features -----------------------------------

SparseCode to_sparse_code(const SparseEstimate& est) {
  SparseCode code(est.h_hat.size());
  for (Index i = 0; i < est.h_hat.size(); ++i)
    if (est.h_hat(i) != 0.0) code.insert(i) = est.h_hat(i);
  return code;
}

namespace {

void check_index_set(std::span<const int> index_set, Index q) {
  if (index_set.empty()) throw BadIndexSet("index set is empty");
  std::set<int> seen;
  for (int i : index_set) {
    if (i < 0 || i >= q) throw BadIndexSet("index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second) throw BadIndexSet("duplicate index " + std::to_string(i));
  }
}

std::vector<int> top_k(const VectorXd& energy, int k) {
  if (k < 1 || k > energy.size()) throw BadIndexSet("k must lie in [1, Q]");
  std::vector<int> order(static_cast<std::size_t>(energy.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return energy(a) > energy(b); });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

}  // namespace

VectorXd reduce_to_sparse_feature(const SparseEstimate& est, std::span<const int> index_set) {
  check_index_set(index_set, est.h_hat.size());
  VectorXd out(static_cast<Index>(index_set.size()));
  for (std::size_t i = 0; i < index_set.size(); ++i) out(static_cast<Index>(i)) = est.h_hat(index_set[i]);
  return out;
}

VectorXd reduce_to_sparse_feature(const SparseCode& code, std::span<const int> index_set) {
  check_index_set(index_set, code.size());
  VectorXd out(static_cast<Index>(index_set.size()));
  for (std::size_t i = 0; i < index_set.size(); ++i) out(static_cast<Index>(i)) = code.coeff(index_set[i]);
  return out;
}

std::vector<int> calibrate_index_set(std::span<const SparseEstimate> estimates, int k) {
  if (estimates.empty()) throw EmptyCalibrationSet("no estimates to calibrate on");
  VectorXd energy = VectorXd::Zero(estimates.front().h_hat.size());
  for (const auto& e : estimates) {
    if (e.h_hat.size() != energy.size()) throw ShapeMismatch("estimates differ in length");
    energy += e.h_hat.cwiseAbs2();
  }
  energy /= static_cast<double>(estimates.size());
  return top_k(energy, k);
}

std::vector<int> calibrate_index_set(std::span<const SparseCode> codes, int k) {
  if (codes.empty()) throw EmptyCalibrationSet("no codes to calibrate on");
  VectorXd energy = VectorXd::Zero(codes.front().size());
  for (const auto& c : codes) {
    if (c.size() != energy.size()) throw ShapeMismatch("codes differ in length");
    for (SparseCode::InnerIterator it(c); it; ++it) energy(it.index()) += it.value() * it.value();
  }
  energy /= static_cast<double>(codes.size());
  return top_k(energy, k);
}

void save_index_set(std::span<const int> index_set, const fs::path& path) {
  std::string out;
  for (int i : index_set) out += std::to_string(i) + '\n';
  write_file_atomic(path, out);
}

std::vector<int> load_index_set(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  std::vector<int> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    out.push_back(static_cast<int>(parse_int(line, path.string() + ":" + std::to_string(line_no))));
  }
  return out;
}

}  // namespace sparse4d
