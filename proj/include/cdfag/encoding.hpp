#pragma once

// Video-level feature encoding: k-means codebook, locality-constrained
// linear coding, pooling and PCA reduction.

#include <cstdint>
#include <string>
#include <vector>

#include "cdfag/types.hpp"

namespace cdfag::encoding {

/// Local descriptors of one video, one descriptor per row.
struct DescriptorSet {
  std::string video_id;
  Matrix descriptors;
};

struct Codebook {
  Matrix bases;  // B x d

  Index size() const { return bases.rows(); }
  Index dim() const { return bases.cols(); }
};

struct KmeansOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-6;
};

/// Samples up to `per_video_sample` descriptors from every video and runs
/// k-means++ seeded Lloyd iterations. Deterministic in `seed`.
Codebook build_codebook(const std::vector<DescriptorSet>& videos,
                        Index codebook_size, Index per_video_sample,
                        std::uint64_t seed, const KmeansOptions& options = {});

/// Lloyd k-means on the rows of `points` (which must hold at least `k`
/// distinct rows). Exposed for reuse outside codebook construction.
Matrix kmeans(const Matrix& points, Index k, std::uint64_t seed,
              const KmeansOptions& options = {});

inline constexpr Index kDefaultCodebookSize = 4000;
inline constexpr Index kDefaultPerVideoSample = 200;
inline constexpr Index kDefaultLlcBases = 5;
inline constexpr double kDefaultLlcReg = 1e-4;

/// Indices of the `k` nearest codewords to `x`, nearest first; equal
/// distances resolve to the lower index.
std::vector<Index> nearest_bases(const Codebook& codebook,
                                 const Eigen::Ref<const Vector>& x, Index k);

/// Locality-constrained linear codes, one row per descriptor (m x B). Each
/// row has `num_bases` nonzeros that sum to one.
Matrix llc_encode(const DescriptorSet& descriptors, const Codebook& codebook,
                  Index num_bases = kDefaultLlcBases,
                  double reg = kDefaultLlcReg);

enum class Pooling { max, sum, mean };

Pooling parse_pooling(const std::string& name);

Vector pool_codes(const Matrix& codes, Pooling pooling = Pooling::max);

/// Principal subspace retaining strictly more than `retained_fraction` of the
/// total covariance eigenvalue mass.
struct PcaModel {
  Vector mean;        // d
  Matrix components;  // p x d, orthonormal rows
  Vector eigenvalues;  // p, descending
  double retained_fraction = 0.99;
  double total_variance = 0.0;

  Index input_dim() const { return mean.size(); }
  Index output_dim() const { return components.rows(); }
};

PcaModel pca_fit(const Matrix& features, double retained_fraction = 0.99);
Matrix pca_project(const PcaModel& model, const Matrix& features);
Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected);

}  // namespace cdfag::encoding
