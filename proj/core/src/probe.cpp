#include "clslu/probe.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace clslu {

void symmetric_eigen(const std::vector<double>& matrix, int64_t n,
                     std::vector<double>& eigenvalues, std::vector<double>& eigenvectors) {
  Eigen::Map<const Eigen::MatrixXd> m(matrix.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw Error("symmetric_eigen: eigendecomposition failed");
  // Eigen returns ascending order; flip to descending.
  eigenvalues.assign(static_cast<size_t>(n), 0.0);
  eigenvectors.assign(static_cast<size_t>(n * n), 0.0);
  for (int64_t j = 0; j < n; ++j) {
    eigenvalues[static_cast<size_t>(j)] = solver.eigenvalues()(n - 1 - j);
    for (int64_t i = 0; i < n; ++i)
      eigenvectors[static_cast<size_t>(i * n + j)] = solver.eigenvectors()(i, n - 1 - j);
  }
}

ProbeResult latent_probe(const SluModel& model, const EmbeddingTable& table,
                         const std::vector<ProbeWord>& words, int64_t n_samples,
                         Rng& rng, LvmMode mode) {
  if (words.empty()) throw Error("latent_probe: no words given");
  if (n_samples < 2) throw Error("latent_probe: need at least 2 samples");

  const int64_t latent = model.dims.latent;
  struct RawCloud {
    std::string word, language;
    std::vector<double> samples;  // n_samples x latent, row-major
  };
  std::vector<RawCloud> raw;

  for (const auto& pw : words) {
    const auto& tokens = pw.context.tokens;
    auto it = std::find(tokens.begin(), tokens.end(), pw.word);
    if (it == tokens.end())
      throw Error("latent_probe: word '" + pw.word + "' not found in its context utterance");
    const size_t pos = static_cast<size_t>(it - tokens.begin());

    // Deterministic encoding (no dropout), then direct draws from the
    // token's Gaussian at that position.
    Graph g;
    Rng enc_rng(0);
    EncodedPair enc = encode_utterance(g, tokens, table, model.encoder.utterance, false, enc_rng);
    LatentPrediction pred =
        lvm_forward(g, enc.hidden, enc.pooled, model.lvm, LvmMode::infer, enc_rng);
    const auto mu = pred.tokens[pos].mu.values();
    const auto log_var = pred.tokens[pos].log_var.values();

    RawCloud cloud;
    cloud.word = pw.word;
    cloud.language = pw.context.language;
    cloud.samples.resize(static_cast<size_t>(n_samples * latent));
    for (int64_t s = 0; s < n_samples; ++s)
      for (int64_t d = 0; d < latent; ++d) {
        const double lv = std::min(std::max(log_var[static_cast<size_t>(d)], -30.0), 30.0);
        const double sigma = lv <= -30.0 ? 0.0 : std::exp(0.5 * lv);
        const double eps = mode == LvmMode::train ? rng.normal() : 0.0;
        cloud.samples[static_cast<size_t>(s * latent + d)] =
            mu[static_cast<size_t>(d)] + sigma * eps;
      }
    raw.push_back(std::move(cloud));
  }

  // Shared PCA over the union of all clouds.
  const int64_t total = n_samples * static_cast<int64_t>(raw.size());
  std::vector<double> mean(static_cast<size_t>(latent), 0.0);
  for (const auto& c : raw)
    for (int64_t s = 0; s < n_samples; ++s)
      for (int64_t d = 0; d < latent; ++d)
        mean[static_cast<size_t>(d)] += c.samples[static_cast<size_t>(s * latent + d)];
  for (auto& m : mean) m /= static_cast<double>(total);

  std::vector<double> cov(static_cast<size_t>(latent * latent), 0.0);
  for (const auto& c : raw)
    for (int64_t s = 0; s < n_samples; ++s)
      for (int64_t i = 0; i < latent; ++i) {
        const double di = c.samples[static_cast<size_t>(s * latent + i)] - mean[static_cast<size_t>(i)];
        for (int64_t j = i; j < latent; ++j) {
          const double dj =
              c.samples[static_cast<size_t>(s * latent + j)] - mean[static_cast<size_t>(j)];
          cov[static_cast<size_t>(i * latent + j)] += di * dj;
        }
      }
  const double denom = static_cast<double>(total - 1);
  for (int64_t i = 0; i < latent; ++i)
    for (int64_t j = i; j < latent; ++j) {
      cov[static_cast<size_t>(i * latent + j)] /= denom;
      cov[static_cast<size_t>(j * latent + i)] = cov[static_cast<size_t>(i * latent + j)];
    }

  std::vector<double> eigenvalues, eigenvectors;
  symmetric_eigen(cov, latent, eigenvalues, eigenvectors);

  ProbeResult result;
  result.eigenvalues = {eigenvalues[0], eigenvalues.size() > 1 ? eigenvalues[1] : 0.0};
  result.top2_eigenvalue_sum = result.eigenvalues[0] + result.eigenvalues[1];

  for (const auto& c : raw) {
    LatentCloud cloud;
    cloud.word = c.word;
    cloud.language = c.language;
    cloud.samples.resize(static_cast<size_t>(n_samples));
    for (int64_t s = 0; s < n_samples; ++s) {
      double x = 0.0, y = 0.0;
      for (int64_t d = 0; d < latent; ++d) {
        const double centered =
            c.samples[static_cast<size_t>(s * latent + d)] - mean[static_cast<size_t>(d)];
        x += centered * eigenvectors[static_cast<size_t>(d * latent + 0)];
        y += centered * eigenvectors[static_cast<size_t>(d * latent + 1)];
      }
      cloud.samples[static_cast<size_t>(s)] = {x, y};
    }
    double mx = 0.0, my = 0.0;
    for (const auto& p : cloud.samples) {
      mx += p[0];
      my += p[1];
    }
    mx /= static_cast<double>(n_samples);
    my /= static_cast<double>(n_samples);
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (const auto& p : cloud.samples) {
      cxx += (p[0] - mx) * (p[0] - mx);
      cxy += (p[0] - mx) * (p[1] - my);
      cyy += (p[1] - my) * (p[1] - my);
    }
    cloud.mean2d = {mx, my};
    cloud.cov2d = {cxx / (n_samples - 1), cxy / (n_samples - 1), cyy / (n_samples - 1)};
    result.clouds.push_back(std::move(cloud));
  }

  // Total variance of the pooled projection; matches the top-2 eigenvalue
  // sum up to floating error.
  double gx = 0.0, gy = 0.0;
  for (const auto& c : result.clouds)
    for (const auto& p : c.samples) {
      gx += p[0];
      gy += p[1];
    }
  gx /= static_cast<double>(total);
  gy /= static_cast<double>(total);
  double vx = 0.0, vy = 0.0;
  for (const auto& c : result.clouds)
    for (const auto& p : c.samples) {
      vx += (p[0] - gx) * (p[0] - gx);
      vy += (p[1] - gy) * (p[1] - gy);
    }
  result.projected_variance = (vx + vy) / denom;
  return result;
}

std::string probe_samples_csv(const ProbeResult& result) {
  std::ostringstream os;
  os << "word,language,x,y\n";
  char buf[96];
  for (const auto& c : result.clouds)
    for (const auto& p : c.samples) {
      std::snprintf(buf, sizeof buf, ",%.9g,%.9g\n", p[0], p[1]);
      os << c.word << ',' << c.language << buf;
    }
  return os.str();
}

std::string probe_summary_csv(const ProbeResult& result) {
  std::ostringstream os;
  os << "word,language,mean_x,mean_y,cov_xx,cov_xy,cov_yy\n";
  char buf[192];
  for (const auto& c : result.clouds) {
    std::snprintf(buf, sizeof buf, ",%.9g,%.9g,%.9g,%.9g,%.9g\n", c.mean2d[0], c.mean2d[1],
                  c.cov2d[0], c.cov2d[1], c.cov2d[2]);
    os << c.word << ',' << c.language << buf;
  }
  return os.str();
}

std::string probe_svg(const ProbeResult& result) {
  // Bounds over all cloud means and 3-sigma extents.
  double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
  bool first = true;
  for (const auto& c : result.clouds) {
    const double rx = 3.0 * std::sqrt(std::max(c.cov2d[0], 1e-12));
    const double ry = 3.0 * std::sqrt(std::max(c.cov2d[2], 1e-12));
    const double r = std::max(rx, ry);
    if (first || c.mean2d[0] - r < lo_x) lo_x = c.mean2d[0] - r;
    if (first || c.mean2d[0] + r > hi_x) hi_x = c.mean2d[0] + r;
    if (first || c.mean2d[1] - r < lo_y) lo_y = c.mean2d[1] - r;
    if (first || c.mean2d[1] + r > hi_y) hi_y = c.mean2d[1] + r;
    first = false;
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
  const double size = 640.0, margin = 60.0;
  const double scale = (size - 2 * margin) / span;
  auto sx = [&](double x) { return margin + (x - lo_x) * scale; };
  auto sy = [&](double y) { return size - margin - (y - lo_y) * scale; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\""
     << size << "\" viewBox=\"0 0 " << size << " " << size << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char buf[512];
  for (size_t i = 0; i < result.clouds.size(); ++i) {
    const auto& c = result.clouds[i];
    const char* color = kColors[i % (sizeof kColors / sizeof kColors[0])];
    // Principal axes of the 2-D covariance give the ellipse geometry.
    const double tr = c.cov2d[0] + c.cov2d[2];
    const double det = c.cov2d[0] * c.cov2d[2] - c.cov2d[1] * c.cov2d[1];
    const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
    const double l1 = std::max(tr / 2.0 + disc, 1e-12);
    const double l2 = std::max(tr / 2.0 - disc, 1e-12);
    const double angle =
        std::atan2(l1 - c.cov2d[0], c.cov2d[1]) * 180.0 / 3.14159265358979323846;
    for (double k : {1.0, 2.0}) {
      std::snprintf(buf, sizeof buf,
                    "<ellipse cx=\"%.2f\" cy=\"%.2f\" rx=\"%.2f\" ry=\"%.2f\" "
                    "transform=\"rotate(%.2f %.2f %.2f)\" fill=\"%s\" fill-opacity=\"%.2f\" "
                    "stroke=\"%s\" stroke-width=\"1\"/>\n",
                    sx(c.mean2d[0]), sy(c.mean2d[1]), k * std::sqrt(l1) * scale,
                    k * std::sqrt(l2) * scale, -angle, sx(c.mean2d[0]), sy(c.mean2d[1]),
                    color, k == 1.0 ? 0.25 : 0.10, color);
      os << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\"/>\n"
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" fill=\"%s\">%s (%s)</text>\n",
                  sx(c.mean2d[0]), sy(c.mean2d[1]), color, sx(c.mean2d[0]) + 6.0,
                  sy(c.mean2d[1]) - 6.0, color, c.word.c_str(), c.language.c_str());
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace clslu
