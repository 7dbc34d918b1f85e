#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "clslu/embeddings.hpp"
#include "clslu/model.hpp"

namespace clslu {

// A word examined inside a full utterance (latents are contextual).
struct ProbeWord {
  std::string word;
  Utterance context;
};

struct LatentCloud {
  std::string word;
  std::string language;
  std::vector<std::array<double, 2>> samples;  // after the shared PCA projection
  std::array<double, 2> mean2d{};
  std::array<double, 3> cov2d{};  // xx, xy, yy
};

struct ProbeResult {
  std::vector<LatentCloud> clouds;
  double projected_variance = 0.0;  // total variance of the pooled 2-D samples
  double top2_eigenvalue_sum = 0.0;
  std::array<double, 2> eigenvalues{};  // descending
};

// For each word: encode its context deterministically, draw n_samples
// latents from the token's Gaussian (z = mu at infer), fit one PCA over
// the union of all clouds and project to 2-D. The per-cloud mean and
// covariance feed the contour rendering.
ProbeResult latent_probe(const SluModel& model, const EmbeddingTable& table,
                         const std::vector<ProbeWord>& words, int64_t n_samples,
                         Rng& rng, LvmMode mode = LvmMode::train);

// One sample per row: word,language,x,y.
std::string probe_samples_csv(const ProbeResult& result);
// One cloud per row: word,language,mean_x,mean_y,cov_xx,cov_xy,cov_yy.
std::string probe_summary_csv(const ProbeResult& result);
// Self-contained contour rendering (1 and 2 sigma ellipses per cloud).
std::string probe_svg(const ProbeResult& result);

// Symmetric eigendecomposition helper exposed for tests: eigenvalues in
// descending order with matching eigenvector columns.
void symmetric_eigen(const std::vector<double>& matrix, int64_t n,
                     std::vector<double>& eigenvalues, std::vector<double>& eigenvectors);

}  // namespace clslu
