#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "sdge/datasets.hpp"
#include "sdge/training.hpp"

using namespace sdge;
using namespace sdge::test;

TEST_CASE("loss weights validation") {
  CHECK_THROWS_AS((LossWeights{1.0, 1.0, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((LossWeights{1.0, 1.0, 101.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((LossWeights{-0.1, 1.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((LossWeights{1.0, 1.5, 1.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((LossWeights{0.0, 0.0, 100.0}.validate()));
}

TEST_CASE("augment: zero sigma is the identity, fixed seed repeats, mean is near zero") {
  const DenseMatrix z = random_dense(30, 8, 4);
  CHECK(max_abs_diff(augment(z, 0.0, 9), z) == 0.0);

  const DenseMatrix a = augment(z, 0.5, 9);
  const DenseMatrix b = augment(z, 0.5, 9);
  CHECK(max_abs_diff(a, b) == 0.0);

  const double sigma = 0.1;
  const DenseMatrix c = augment(z, sigma, 10);
  double mean = 0.0;
  for (int i = 0; i < z.rows(); ++i) {
    for (int j = 0; j < z.cols(); ++j) mean += c(i, j) - z(i, j);
  }
  mean /= static_cast<double>(z.size());
  CHECK(std::abs(mean) < 4.0 * sigma / std::sqrt(static_cast<double>(z.size())));
}

TEST_CASE("sample_negatives: complete neighborhood raises NoNegativesAvailable") {
  const Graph p2 = path_graph(2);
  CHECK_THROWS_AS(static_cast<void>(sample_negatives(0, p2, 3, 1)), NoNegativesAvailable);
}

TEST_CASE("sample_negatives: path fixture candidate set") {
  const Graph p4 = path_graph(4);
  const auto draws = sample_negatives(0, p4, 2, 5);  // N(0) = {1}
  REQUIRE(draws.size() == 2);
  for (int id : draws) CHECK((id == 2 || id == 3));
}

TEST_CASE("sample_negatives: fixed seed gives an identical sequence") {
  const Graph g = random_connected_graph(20, 0.2, 8);
  NegativeSampler s1(g, 4, 77);
  NegativeSampler s2(g, 4, 77);
  for (int round = 0; round < 3; ++round) CHECK(s1.sample_all() == s2.sample_all());
}

TEST_CASE("negative samples never hit the closed neighborhood") {
  std::mt19937_64 seeds(3);
  int draws_done = 0;
  while (draws_done < 1000) {
    const Graph g = random_connected_graph(15, 0.3, seeds());
    NegativeSampler sampler(g, 5, seeds());
    for (int i = 0; i < g.n && draws_done < 1000; ++i) {
      for (int id : sampler.sample(i)) {
        CHECK(id != i);
        CHECK(g.adjacency.entry(i, id) == 0.0);
        ++draws_done;
      }
    }
  }
}

TEST_CASE("degree-weighted sampling prefers high-degree candidates") {
  // Star plus pendant chain: node 0 is the hub. Sampling for a chain-end node
  // should hit the hub far more often than any single leaf under degree^0.75.
  Graph g = graph_from_edges(12, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6}, {0, 7},
                                  {8, 9}, {9, 10}, {10, 11}});
  NegativeSampler uniform(g, 2000, 5, NegativeWeighting::Uniform);
  NegativeSampler weighted(g, 2000, 5, NegativeWeighting::DegreePow);
  auto count_hub = [](const std::vector<int>& draws) {
    int hub = 0;
    for (int d : draws) hub += d == 0;
    return hub;
  };
  const int hub_uniform = count_hub(uniform.sample(11));
  const int hub_weighted = count_hub(weighted.sample(11));
  CHECK(hub_weighted > hub_uniform);
}

TEST_CASE("contrastive loss fixtures") {
  // All-zero dot products cancel to zero.
  const DenseMatrix z(3, 4, 0.0);
  CHECK(contrastive_loss(z, z, {{1}, {2}, {0}}, 1.0) == doctest::Approx(0.0).epsilon(1e-15));

  // Hand-evaluated single-node case.
  DenseMatrix zi(1, 2);
  zi(0, 0) = 1.0;
  DenseMatrix zp = zi;
  // One negative embedding (0, 1): stored as row 0 of z itself is the anchor,
  // so use a 2-node layout where node 1 is the negative.
  DenseMatrix z2(2, 2);
  z2(0, 0) = 1.0;  // anchor (1, 0)
  z2(1, 1) = 1.0;  // negative (0, 1)
  DenseMatrix z2p = z2;
  // Only node 0 matters for the fixture; node 1 mirrors it to keep shapes.
  const double loss = contrastive_loss(z2, z2p, {{1}, {0}}, 1.0);
  // Per node: log s(1) - log s(0) = -0.3133 + 0.6931 = 0.3799; both nodes
  // are symmetric, so the mean equals the fixture too.
  CHECK(loss == doctest::Approx(0.3799).epsilon(1e-3));
}

TEST_CASE("contrastive loss is invariant under (Z -> cZ, tau -> c^2 tau)") {
  const DenseMatrix z = random_dense(12, 6, 31);
  const DenseMatrix zp = random_dense(12, 6, 32);
  std::vector<std::vector<int>> negatives;
  std::mt19937_64 rng(33);
  for (int i = 0; i < 12; ++i) {
    std::vector<int> row;
    for (int t = 0; t < 3; ++t) row.push_back(static_cast<int>(rng() % 12));
    negatives.push_back(row);
  }
  const double base = contrastive_loss(z, zp, negatives, 2.5);
  const double c = 1.75;
  DenseMatrix zs = z, zps = zp;
  zs.scale_inplace(c);
  zps.scale_inplace(c);
  const double scaled = contrastive_loss(zs, zps, negatives, 2.5 * c * c);
  CHECK(std::abs(base - scaled) < 1e-10);
}

TEST_CASE("reconstruction loss fixtures") {
  // Zero everything.
  const SparseMatrix zero_adj = SparseMatrix::from_triplets(2, {});
  CHECK(reconstruction_loss(DenseMatrix(2, 3), zero_adj, DenseMatrix(2, 3)) == 0.0);

  // Single edge, zero embeddings and attributes: (1/4) * ||A||_F^2 = 0.5.
  const Graph p2 = path_graph(2);
  CHECK(reconstruction_loss(DenseMatrix(2, 3), p2.adjacency, DenseMatrix(2, 3)) ==
        doctest::Approx(0.5).epsilon(1e-14));

  // Exact factorization: ZZ^T = A = XX^T gives zero loss.
  const DenseMatrix z = random_dense(4, 2, 35);
  const SparseMatrix gram = SparseMatrix::from_dense(matmul_nt(z, z));
  CHECK(reconstruction_loss(z, gram, z) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("regularization loss fixtures and homogeneity") {
  const Graph p2 = path_graph(2);
  const SparseMatrix lap = laplacian(p2);

  DenseMatrix constant(2, 3, 0.8);
  CHECK(regularization_loss(constant, lap) == doctest::Approx(0.0).epsilon(1e-14));

  DenseMatrix z(2, 1);
  z(0, 0) = 1.0;
  z(1, 0) = -1.0;
  CHECK(regularization_loss(z, lap) == doctest::Approx(2.0).epsilon(1e-14));

  DenseMatrix z3 = random_dense(8, 4, 41);
  const Graph g = random_connected_graph(8, 0.4, 42);
  const SparseMatrix lg = laplacian(g);
  const double base = regularization_loss(z3, lg);
  CHECK(base >= 0.0);
  z3.scale_inplace(3.0);
  CHECK(regularization_loss(z3, lg) == doctest::Approx(9.0 * base).epsilon(1e-10));
}

TEST_CASE("regularization equals the edge-difference form") {
  const Graph g = random_connected_graph(10, 0.3, 51);
  const SparseMatrix lap = laplacian(g);
  const DenseMatrix z = random_dense(10, 5, 52);
  double edge_form = 0.0;
  for (int i = 0; i < g.n; ++i) {
    for (int p = g.adjacency.row_begin(i); p < g.adjacency.row_end(i); ++p) {
      const int j = g.adjacency.cols()[p];
      if (j <= i) continue;
      double d2 = 0.0;
      for (int c = 0; c < z.cols(); ++c) {
        const double d = z(i, c) - z(j, c);
        d2 += d * d;
      }
      edge_form += g.adjacency.values()[p] * d2;
    }
  }
  edge_form /= g.n;
  CHECK(regularization_loss(z, lap) == doctest::Approx(edge_form).epsilon(1e-12));
}

TEST_CASE("total loss arithmetic") {
  CHECK(total_loss(0.38, 0.5, 2.0, {0.0, 0.0, 1.0}) == doctest::Approx(-0.38));
  CHECK(total_loss(0.0, 0.0, 0.0, {1.0, 1.0, 50.0}) == 0.0);
  CHECK(total_loss(0.38, 0.5, 2.0, {1.0, 1.0, 50.0}) == doctest::Approx(2.12));
}

namespace {

TrainConfig tiny_config() {
  TrainConfig config;
  config.model.layer_widths = {10, 8, 5};
  config.model.mlp_hidden = 6;
  config.model.embed_dim = 4;
  config.epochs = 5;
  config.order = 2;
  config.clusters = 2;
  config.negatives = 2;
  config.spectral = SpectralSchedule::Off;
  return config;
}

}  // namespace

TEST_CASE("fit: zero epochs returns the initial forward pass and empty history") {
  const Graph g = random_connected_graph(10, 0.4, 61);
  TrainConfig config = tiny_config();
  config.epochs = 0;
  const FitResult result = fit(g, config, LossWeights{});
  CHECK(result.history.empty());
  CHECK(result.embedding.rows() == 10);
  CHECK(result.embedding.cols() == 4);
}

TEST_CASE("fit: fixed seed gives bit-identical embeddings") {
  const Graph g = random_connected_graph(12, 0.35, 62);
  TrainConfig config = tiny_config();
  config.deterministic = true;
  const FitResult a = fit(g, config, LossWeights{});
  const FitResult b = fit(g, config, LossWeights{});
  CHECK(max_abs_diff(a.embedding, b.embedding) == 0.0);
  CHECK(a.partition.assignment == b.partition.assignment);
}

TEST_CASE("fit: loss decreases on an SBM for three seeds") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Graph g = generate_sbm(3, 12, 0.5, 0.05, seed);
    TrainConfig config = tiny_config();
    config.clusters = 3;
    config.epochs = 30;
    config.seed = seed;
    const FitResult result = fit(g, config, LossWeights{});
    REQUIRE(!result.history.empty());
    CHECK(result.history.back().total < result.history.front().total);
    // History is monotone in epoch index.
    for (size_t i = 0; i < result.history.size(); ++i) {
      CHECK(result.history[i].epoch == static_cast<int>(i));
    }
  }
}

TEST_CASE("fit: early stop requires at least five epochs and a flat loss") {
  const Graph g = random_connected_graph(10, 0.4, 63);
  TrainConfig config = tiny_config();
  config.epochs = 50;
  config.tolerance = 1e9;  // everything counts as flat
  const FitResult result = fit(g, config, LossWeights{});
  CHECK(result.history.size() == 6);  // 5 flat transitions after the first epoch
}

TEST_CASE("fit: k from labels when clusters is unset") {
  Graph g = generate_sbm(3, 8, 0.6, 0.05, 7);
  TrainConfig config = tiny_config();
  config.clusters = 0;
  const FitResult result = fit(g, config, LossWeights{});
  CHECK(result.partition.k == 3);

  Graph unlabeled = random_connected_graph(10, 0.4, 8);
  CHECK_THROWS_AS(static_cast<void>(fit(unlabeled, config, LossWeights{})),
                  std::invalid_argument);
}

TEST_CASE("fit: gcn-ae baseline trains with the reconstruction objective only") {
  const Graph g = generate_sbm(2, 10, 0.5, 0.05, 9);
  TrainConfig config = tiny_config();
  config.gcn_ae = true;
  config.epochs = 10;
  const FitResult result = fit(g, config, LossWeights{});
  REQUIRE(!result.history.empty());
  for (const EpochRecord& r : result.history) {
    CHECK(r.contrastive == 0.0);
    CHECK(r.regularization == 0.0);
    CHECK(r.total == r.reconstruction);
  }
  CHECK(result.history.back().total < result.history.front().total);
  CHECK(result.fusion_alpha == std::vector<double>{1.0});
}

TEST_CASE("fit: end-to-end mode emits k-wide scores and argmax partitions") {
  const Graph g = generate_sbm(3, 8, 0.6, 0.05, 10);
  TrainConfig config = tiny_config();
  config.model.end_to_end = true;
  config.clusters = 3;
  config.epochs = 3;
  const FitResult result = fit(g, config, LossWeights{});
  CHECK(result.embedding.cols() == 3);
  CHECK(result.partition.k == 3);
}

TEST_CASE("fit: each-epoch spectral schedule runs and records spectral time") {
  const Graph g = generate_sbm(2, 10, 0.5, 0.05, 11);
  TrainConfig config = tiny_config();
  config.spectral = SpectralSchedule::EachEpoch;
  config.epochs = 4;
  const FitResult result = fit(g, config, LossWeights{});
  CHECK(result.history.size() == 4);
  CHECK(result.spectral_seconds > 0.0);
}

TEST_CASE("full-loss gradient matches finite differences on a 10-node graph") {
  // RNG frozen: noise and negatives are fixed constants inside the closure.
  const Graph g = random_connected_graph(10, 0.4, 77);
  ModelConfig mc;
  mc.layer_widths = {10, 8, 4};
  mc.mlp_hidden = 6;
  mc.embed_dim = 5;
  mc.include_attributes = false;
  ModelState model = ModelState::create(mc, 2, 10, 8, 5, 78);

  const auto powers = matrix_power(g.adjacency, 2);
  std::vector<SparseMatrix> s_hats;
  for (const auto& p : powers) s_hats.push_back(sym_normalize(p));
  const SparseMatrix lap = laplacian(g);
  const DenseMatrix features = s_hats[0].to_dense();
  const DenseMatrix noise = random_dense(10, 5, 79);
  NegativeSampler sampler(g, 2, 80);
  const auto negatives = sampler.sample_all();
  const LossWeights weights{0.7, 0.4, 2.0};
  const std::vector<double> alpha = {0.6, 0.4};

  auto build = [&](ad::Tape& tape) {
    const ad::NodeId input = tape.constant(features);
    const auto outputs = gcn_forward(tape, model, s_hats, input);
    const ad::NodeId fused = fuse(tape, outputs, alpha, mc, std::nullopt);
    const ad::NodeId z = mlp_forward(tape, fused, *model.mlp);
    const ad::NodeId z_pos = tape.axpy(z, tape.constant(noise), 0.1);
    const ad::NodeId ls = contrastive_loss_node(tape, z, z_pos, negatives, weights.tau);
    const ad::NodeId lsa = reconstruction_loss_node(tape, z, g.adjacency, input);
    const ad::NodeId lr = regularization_loss_node(tape, z, lap);
    return total_loss_node(tape, ls, lsa, lr, weights);
  };
  const auto report = ad::gradient_check(build, model.parameters(), 1e-5);
  CHECK(report.max_rel_error < 1e-4);
}
