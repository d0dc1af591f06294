#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace sparse4d {

/// Overcomplete P x Q dictionary with unit-norm columns (atoms).
class Dictionary {
 public:
  Dictionary() = default;
  /// Validates Q > P, finiteness and unit column norms (1e-12).
  explicit Dictionary(Eigen::MatrixXd atoms);

  const Eigen::MatrixXd& atoms() const { return atoms_; }
  Eigen::Index rows() const { return atoms_.rows(); }
  Eigen::Index cols() const { return atoms_.cols(); }

 private:
  Eigen::MatrixXd atoms_;
};

/// Haar basis on the next power of two >= P (truncated to P rows), followed by
/// circular shifts of the Haar mother wavelet at each scale, finest first.
/// Zero or (anti)parallel columns are replaced by seeded random unit columns.
Dictionary build_wavelet_dictionary(int feature_length, int overcompleteness);

/// First line `P,Q`, then P rows of Q comma-separated values.
void save_dictionary_csv(const Dictionary& dict, const std::filesystem::path& path);
Dictionary load_dictionary_csv(const std::filesystem::path& path);

struct SparsePrior {
  double p = 0.0;       // Bernoulli activation probability
  double sigma2 = 0.0;  // residual variance

  void validate() const;
};

inline constexpr double kDefaultExpectedSparsity = 5.0;
inline constexpr double kDefaultSigma2Scale = 0.01;

/// p = 5/Q (capped at 0.5) and sigma2 = scale * |x|^2 / P, floored at 1e-12
/// so that a zero input still yields a valid prior.
SparsePrior default_prior(Eigen::Index atom_count, const Eigen::VectorXd& x,
                          double sigma2_scale = kDefaultSigma2Scale,
                          double expected_sparsity = kDefaultExpectedSparsity);

/// Strictly increasing set of atom indices.
struct Support {
  std::vector<int> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  auto operator<=>(const Support&) const = default;
};

/// Throws InvalidArgument unless indices are strictly increasing in [0, Q).
void validate_support(const Support& s, Eigen::Index atom_count);

/// Condition number above which a support is treated as rank deficient.
inline constexpr double kMaxSupportCondition = 1e10;

Eigen::MatrixXd support_columns(const Dictionary& dict, const Support& s);

/// Least-squares coefficients of x on the support's atoms.
Eigen::VectorXd blue_estimate(const Dictionary& dict, const Support& s, const Eigen::VectorXd& x);

/// I - A_S (A_S^T A_S)^{-1} A_S^T.
Eigen::MatrixXd complement_projector(const Dictionary& dict, const Support& s);

/// |S| log p + (Q - |S|) log(1 - p).
double support_log_prior(std::size_t support_size, const SparsePrior& prior, Eigen::Index atom_count);

/// -|Z_S x|^2 / (2 sigma2).
double support_log_likelihood(const Dictionary& dict, const Support& s, const Eigen::VectorXd& x,
                              const SparsePrior& prior);

struct WeightedSupport {
  Support support;
  double log_posterior = 0.0;  // unnormalized
  double weight = 0.0;         // normalized over the visited set
};

struct SparseEstimate {
  Eigen::VectorXd h_hat;
  std::vector<WeightedSupport> supports;
  double log_evidence = 0.0;
};

enum class SearchMode { exact, beam };

struct SearchConfig {
  SearchMode mode = SearchMode::beam;
  int max_support_size = 8;
  int beam_width = 16;

  void validate() const;
};

inline constexpr double kMaxEnumeratedSupports = 1e6;

/// Number of supports with |S| <= s_max over Q atoms.
double support_count(Eigen::Index atom_count, int max_support_size);

/// Posterior-weighted MMSE coefficient estimator. Holds the dictionary Gram
/// matrix so that each support extension costs O(|S| Q).
class SparseCoder {
 public:
  explicit SparseCoder(Dictionary dict);

  const Dictionary& dictionary() const { return dict_; }

  SparseEstimate estimate(const Eigen::VectorXd& x, const SparsePrior& prior, const SearchConfig& cfg) const;

 private:
  Dictionary dict_;
  Eigen::MatrixXd gram_;
};

SparseEstimate mmse_estimate(const Dictionary& dict, const Eigen::VectorXd& x, const SparsePrior& prior,
                             const SearchConfig& cfg);

/// Reference estimator: enumerates every support with |S| <= s_max and scores
/// it through blue_estimate / support_log_likelihood.
SparseEstimate exact_mmse_oracle(const Dictionary& dict, const Eigen::VectorXd& x, const SparsePrior& prior,
                                 int max_support_size);

using SparseCode = Eigen::SparseVector<double>;

SparseCode to_sparse_code(const SparseEstimate& est);

inline constexpr int kSparseFeatureCount = 30;

/// h_hat restricted to `index_set`, in the order given.
Eigen::VectorXd reduce_to_sparse_feature(const SparseEstimate& est, std::span<const int> index_set);
Eigen::VectorXd reduce_to_sparse_feature(const SparseCode& code, std::span<const int> index_set);

/// The k atoms with the largest mean squared coefficient, most energetic
/// first; ties go to the lower index.
std::vector<int> calibrate_index_set(std::span<const SparseEstimate> estimates, int k = kSparseFeatureCount);
std::vector<int> calibrate_index_set(std::span<const SparseCode> codes, int k = kSparseFeatureCount);

/// One index per line.
void save_index_set(std::span<const int> index_set, const std::filesystem::path& path);
std::vector<int> load_index_set(const std::filesystem::path& path);

}  // namespace sparse4d
