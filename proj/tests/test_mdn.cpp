#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ktm/errors.hpp"
#include "ktm/mdn.hpp"
#include "ktm/rng.hpp"

using ktm::MdnConfig;
using ktm::MdnParams;
using ktm::MixtureParams;

namespace {

MdnConfig tiny_config(int input = 3, int hidden = 5, int components = 2, int output = 4) {
  MdnConfig c;
  c.input_dim = input;
  c.hidden_dim = hidden;
  c.components = components;
  c.output_dim = output;
  c.seed = 42;
  return c;
}

MdnParams random_params(const MdnConfig& config, ktm::Rng& rng, bool random_standardization) {
  MdnParams p = MdnParams::initialize(config);
  auto jitter = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) += 0.3 * rng.normal();
    }
  };
  auto jitter_v = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 0.3 * rng.normal();
  };
  jitter(p.w_hidden);
  jitter_v(p.b_hidden);
  jitter(p.w_alpha);
  jitter_v(p.b_alpha);
  jitter(p.w_mu);
  jitter_v(p.b_mu);
  jitter(p.w_sigma);
  jitter_v(p.b_sigma);
  if (random_standardization) {
    for (Eigen::Index m = 0; m < p.out_shift.size(); ++m) {
      p.out_shift[m] = rng.normal();
      p.out_scale[m] = 0.5 + rng.uniform() * 2.0;
    }
  }
  return p;
}

// Naive mixture density in extended precision, no log-sum-exp.
long double naive_nll(const MixtureParams& mix, const Eigen::VectorXd& target) {
  const long double inv_sqrt_2pi = 0.398942280401432677939946L;
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < mix.alphas.size(); ++i) {
    long double density = static_cast<long double>(mix.alphas[i]);
    for (Eigen::Index m = 0; m < target.size(); ++m) {
      const long double sigma = mix.sigmas(i, m);
      const long double z = (static_cast<long double>(target[m]) - mix.means(i, m)) / sigma;
      density *= inv_sqrt_2pi / sigma * std::exp(-0.5L * z * z);
    }
    total += density;
  }
  return -std::log(total);
}

// Collects every trained parameter into one flat view for finite differencing.
std::vector<double*> param_view(MdnParams& p) {
  std::vector<double*> view;
  auto add_m = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) view.push_back(m.data() + i);
  };
  auto add_v = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) view.push_back(v.data() + i);
  };
  add_m(p.w_hidden);
  add_v(p.b_hidden);
  add_m(p.w_alpha);
  add_v(p.b_alpha);
  add_m(p.w_mu);
  add_v(p.b_mu);
  add_m(p.w_sigma);
  add_v(p.b_sigma);
  return view;
}

std::vector<double> gradient_flat(const ktm::MdnGradient& g) {
  std::vector<double> flat;
  auto add_m = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) flat.push_back(*(m.data() + i));
  };
  auto add_v = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) flat.push_back(v[i]);
  };
  add_m(g.w_hidden);
  add_v(g.b_hidden);
  add_m(g.w_alpha);
  add_v(g.b_alpha);
  add_m(g.w_mu);
  add_v(g.b_mu);
  add_m(g.w_sigma);
  add_v(g.b_sigma);
  return flat;
}

}  // namespace

TEST_CASE("forward: zero parameters give the uniform unit mixture") {
  const auto config = tiny_config();
  MdnParams p = MdnParams::initialize(config);
  p.w_hidden.setZero();
  p.w_alpha.setZero();
  p.w_mu.setZero();
  p.w_sigma.setZero();
  const Eigen::VectorXd phi = Eigen::VectorXd::Constant(config.input_dim, 0.5);
  const auto mix = ktm::forward(p, phi);
  for (Eigen::Index i = 0; i < mix.alphas.size(); ++i) {
    CHECK(mix.alphas[i] == 0.5);
  }
  CHECK(mix.means.cwiseAbs().maxCoeff() == 0.0);
  CHECK((mix.sigmas.array() == 1.0).all());
}

TEST_CASE("forward: alpha on the simplex; single component is exact") {
  ktm::Rng rng(1);
  const auto config = tiny_config();
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_params(config, rng, true);
    Eigen::VectorXd phi(config.input_dim);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
    const auto mix = ktm::forward(p, phi);
    CHECK(std::abs(mix.alphas.sum() - 1.0) <= 1e-6);
    CHECK((mix.alphas.array() >= 0.0).all());
    CHECK((mix.sigmas.array() >= 1e-6).all());
  }

  const auto single = tiny_config(3, 4, 1, 2);
  ktm::Rng rng2(2);
  auto p1 = random_params(single, rng2, false);
  Eigen::VectorXd phi = Eigen::VectorXd::Constant(3, 0.25);
  CHECK(ktm::forward(p1, phi).alphas[0] == 1.0);
}

TEST_CASE("forward: dimension mismatch rejected") {
  const auto config = tiny_config();
  const auto p = MdnParams::initialize(config);
  CHECK_THROWS_AS(ktm::forward(p, Eigen::VectorXd::Zero(config.input_dim + 1)),
                  ktm::InvalidInput);
}

TEST_CASE("nll_loss: standard normal at the mean, mixture collapse, naive oracle") {
  MixtureParams mix;
  mix.alphas = Eigen::VectorXd::Ones(1);
  mix.means = Eigen::MatrixXd::Zero(1, 1);
  mix.sigmas = Eigen::MatrixXd::Ones(1, 1);
  CHECK(ktm::nll_loss(mix, Eigen::VectorXd::Zero(1)) ==
        doctest::Approx(0.9189385332046727).epsilon(1e-14));

  // Two identical components behave like one.
  MixtureParams two;
  two.alphas = Eigen::VectorXd::Constant(2, 0.5);
  two.means = Eigen::MatrixXd::Zero(2, 3);
  two.means << 0.4, -1.0, 2.0, 0.4, -1.0, 2.0;
  two.sigmas = Eigen::MatrixXd::Constant(2, 3, 0.7);
  MixtureParams one;
  one.alphas = Eigen::VectorXd::Ones(1);
  one.means = two.means.topRows(1);
  one.sigmas = two.sigmas.topRows(1);
  Eigen::VectorXd w(3);
  w << 0.2, -0.6, 2.2;
  CHECK(ktm::nll_loss(two, w) == doctest::Approx(ktm::nll_loss(one, w)).epsilon(1e-12));

  ktm::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    MixtureParams m;
    const int r = 3, d = 4;
    m.alphas.resize(r);
    for (int i = 0; i < r; ++i) m.alphas[i] = 0.1 + rng.uniform();
    m.alphas /= m.alphas.sum();
    m.means.resize(r, d);
    m.sigmas.resize(r, d);
    Eigen::VectorXd target(d);
    for (int j = 0; j < d; ++j) target[j] = rng.normal();
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < d; ++j) {
        m.means(i, j) = rng.normal();
        m.sigmas(i, j) = 0.3 + rng.uniform();
      }
    }
    const double expected = static_cast<double>(naive_nll(m, target));
    CHECK(ktm::nll_loss(m, target) == doctest::Approx(expected).epsilon(1e-11));
  }
}

TEST_CASE("nll_loss: invalid sigma rejected") {
  MixtureParams mix;
  mix.alphas = Eigen::VectorXd::Ones(1);
  mix.means = Eigen::MatrixXd::Zero(1, 1);
  mix.sigmas = Eigen::MatrixXd::Constant(1, 1, -1.0);
  CHECK_THROWS_AS(ktm::nll_loss(mix, Eigen::VectorXd::Zero(1)), ktm::InvalidInput);
}

TEST_CASE("nll_loss: invariant under permuting components") {
  ktm::Rng rng(77);
  MixtureParams m;
  const int r = 4, d = 3;
  m.alphas.resize(r);
  for (int i = 0; i < r; ++i) m.alphas[i] = 0.05 + rng.uniform();
  m.alphas /= m.alphas.sum();
  m.means.resize(r, d);
  m.sigmas.resize(r, d);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < d; ++j) {
      m.means(i, j) = rng.normal();
      m.sigmas(i, j) = 0.2 + rng.uniform();
    }
  }
  Eigen::VectorXd target(d);
  for (int j = 0; j < d; ++j) target[j] = rng.normal();

  MixtureParams rotated = m;
  const int perm[4] = {2, 0, 3, 1};
  for (int i = 0; i < r; ++i) {
    rotated.alphas[i] = m.alphas[perm[i]];
    rotated.means.row(i) = m.means.row(perm[i]);
    rotated.sigmas.row(i) = m.sigmas.row(perm[i]);
  }
  CHECK(ktm::nll_loss(rotated, target) == doctest::Approx(ktm::nll_loss(m, target)).epsilon(1e-13));
}

TEST_CASE("loss_gradient: zero at the symmetric stationary point") {
  const auto config = tiny_config();
  MdnParams p = MdnParams::initialize(config);
  p.w_hidden.setZero();
  p.w_alpha.setZero();
  p.w_mu.setZero();
  p.w_sigma.setZero();
  const Eigen::VectorXd phi = Eigen::VectorXd::Zero(config.input_dim);
  const Eigen::VectorXd target = Eigen::VectorXd::Zero(config.output_dim);
  const auto g = ktm::loss_gradient(p, phi, target);
  CHECK(g.w_mu.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.b_mu.cwiseAbs().maxCoeff() == 0.0);
  // responsibilities equal the coefficients up to exp/log rounding
  CHECK(g.b_alpha.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("loss_gradient: matches central finite differences everywhere") {
  ktm::Rng rng(2024);
  const auto config = tiny_config(4, 6, 3, 5);
  const double h = 1e-5;
  int draws = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_params(config, rng, trial % 2 == 1);
    Eigen::VectorXd phi(config.input_dim);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
    Eigen::VectorXd target(config.output_dim);
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = rng.normal();

    const auto analytic = gradient_flat(ktm::loss_gradient(p, phi, target));
    auto view = param_view(p);
    REQUIRE(analytic.size() == view.size());
    for (std::size_t i = 0; i < view.size(); ++i) {
      const double saved = *view[i];
      *view[i] = saved + h;
      const double hi = ktm::nll_loss(ktm::forward(p, phi), target);
      *view[i] = saved - h;
      const double lo = ktm::nll_loss(ktm::forward(p, phi), target);
      *view[i] = saved;
      const double fd = (hi - lo) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-5});
      CHECK(std::abs(fd - analytic[i]) / denom < 1e-4);
    }
    ++draws;
  }
  CHECK(draws == 100);
}

TEST_CASE("loss_gradient: batch gradient equals the mean of per-example gradients") {
  ktm::Rng rng(31);
  const auto config = tiny_config();
  auto p = random_params(config, rng, false);
  std::vector<Eigen::VectorXd> phis, targets;
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd phi(config.input_dim), target(config.output_dim);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = rng.normal();
    phis.push_back(phi);
    targets.push_back(target);
  }
  auto mean_grad = ktm::MdnGradient::zeros_like(p);
  for (int k = 0; k < 4; ++k) {
    mean_grad.accumulate(ktm::loss_gradient(p, phis[k], targets[k]), 0.25);
  }
  // The same reduction train() performs per batch.
  auto batch = ktm::MdnGradient::zeros_like(p);
  for (int k = 0; k < 4; ++k) batch.accumulate(ktm::loss_gradient(p, phis[k], targets[k]), 1.0);
  CHECK((batch.w_hidden / 4.0 - mean_grad.w_hidden).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((batch.w_mu / 4.0 - mean_grad.w_mu).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("train: zero learning rate leaves parameters and losses unchanged") {
  ktm::Rng rng(5);
  MdnConfig config = tiny_config();
  config.learning_rate = 0.0;
  config.epochs = 4;
  ktm::MdnDataset data;
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd phi(config.input_dim), target(config.output_dim);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = rng.normal();
    data.features.push_back(phi);
    data.targets.push_back(target);
  }
  const auto result = ktm::train(config, data);
  const auto fresh = MdnParams::initialize(config);
  CHECK((result.params.w_hidden - fresh.w_hidden).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t e = 1; e < result.epoch_losses.size(); ++e) {
    CHECK(result.epoch_losses[e] == result.epoch_losses[0]);
  }
}

TEST_CASE("train: single example with one component recovers the target mean") {
  MdnConfig config = tiny_config(2, 8, 1, 3);
  config.learning_rate = 0.05;
  config.epochs = 3000;
  config.batch_size = 1;
  ktm::MdnDataset data;
  Eigen::VectorXd phi(2);
  phi << 0.8, 0.3;
  Eigen::VectorXd target(3);
  target << 1.5, -2.0, 0.25;
  data.features.push_back(phi);
  data.targets.push_back(target);
  const auto result = ktm::train(config, data);
  const auto mix = ktm::forward(result.params, phi, config.sigma_floor);
  for (int m = 0; m < 3; ++m) {
    CHECK(std::abs(mix.means(0, m) - target[m]) <= 1e-2);
  }
}

TEST_CASE("train: deterministic under the seed, bitwise") {
  ktm::Rng rng(6);
  MdnConfig config = tiny_config();
  config.epochs = 5;
  config.seed = 99;
  ktm::MdnDataset data;
  for (int k = 0; k < 12; ++k) {
    Eigen::VectorXd phi(config.input_dim), target(config.output_dim);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = rng.normal();
    data.features.push_back(phi);
    data.targets.push_back(target);
  }
  const auto a = ktm::train(config, data);
  const auto b = ktm::train(config, data);
  CHECK((a.params.w_hidden - b.params.w_hidden).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.params.w_mu - b.params.w_mu).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.params.b_sigma - b.params.b_sigma).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.epoch_losses.size() == b.epoch_losses.size());
  for (std::size_t e = 0; e < a.epoch_losses.size(); ++e) {
    CHECK(a.epoch_losses[e] == b.epoch_losses[e]);
  }
}

TEST_CASE("train: loss decreases over epochs on a random dataset") {
  ktm::Rng rng(8);
  MdnConfig config = tiny_config(6, 16, 2, 4);
  config.epochs = 80;
  config.learning_rate = 1e-3;
  ktm::MdnDataset data;
  for (int k = 0; k < 64; ++k) {
    Eigen::VectorXd phi(config.input_dim), target(config.output_dim);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
    const double mode = phi[0] > 0.5 ? 3.0 : -3.0;
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = mode + 0.3 * rng.normal();
    data.features.push_back(phi);
    data.targets.push_back(target);
  }
  const auto result = ktm::train(config, data);
  CHECK(result.epoch_losses.back() < result.epoch_losses.front());
}

TEST_CASE("train: divergence raises a TrainingError naming the epoch") {
  ktm::Rng rng(13);
  MdnConfig config = tiny_config();
  config.learning_rate = 1e9;  // guaranteed blow-up
  config.epochs = 5;
  ktm::MdnDataset data;
  for (int k = 0; k < 8; ++k) {
    Eigen::VectorXd phi(config.input_dim), target(config.output_dim);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = 5.0 * rng.normal();
    data.features.push_back(phi);
    data.targets.push_back(target);
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(ktm::train(config, data)),
                       doctest::Contains("epoch"), ktm::TrainingError);
}

TEST_CASE("nll_loss is invariant under permuting the parameter heads") {
  ktm::Rng rng(55);
  const auto config = tiny_config(4, 5, 3, 4);
  auto params = random_params(config, rng, true);

  const int d = config.output_dim;
  const int perm[3] = {2, 0, 1};
  MdnParams permuted = params;
  for (int i = 0; i < 3; ++i) {
    permuted.w_alpha.row(i) = params.w_alpha.row(perm[i]);
    permuted.b_alpha[i] = params.b_alpha[perm[i]];
    permuted.w_mu.middleRows(i * d, d) = params.w_mu.middleRows(perm[i] * d, d);
    permuted.b_mu.segment(i * d, d) = params.b_mu.segment(perm[i] * d, d);
    permuted.w_sigma.middleRows(i * d, d) = params.w_sigma.middleRows(perm[i] * d, d);
    permuted.b_sigma.segment(i * d, d) = params.b_sigma.segment(perm[i] * d, d);
  }
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd phi(config.input_dim), target(config.output_dim);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = rng.normal();
    const double base = ktm::nll_loss(ktm::forward(params, phi), target);
    const double swapped = ktm::nll_loss(ktm::forward(permuted, phi), target);
    CHECK(swapped == doctest::Approx(base).epsilon(1e-13));
  }
}

TEST_CASE("train: empty dataset and dimension mismatch rejected") {
  MdnConfig config = tiny_config();
  CHECK_THROWS_AS(ktm::train(config, {}), ktm::InvalidInput);
  ktm::MdnDataset bad;
  bad.features.push_back(Eigen::VectorXd::Zero(config.input_dim + 2));
  bad.targets.push_back(Eigen::VectorXd::Zero(config.output_dim));
  CHECK_THROWS_AS(ktm::train(config, bad), ktm::InvalidInput);
}

TEST_CASE("forward fuzz: simplex and sigma floor hold over many draws") {
  ktm::Rng rng(1234);
  const auto config = tiny_config(5, 7, 4, 6);
  for (int rep = 0; rep < 200; ++rep) {
    auto p = random_params(config, rng, rep % 2 == 0);
    for (int call = 0; call < 10; ++call) {
      Eigen::VectorXd phi(config.input_dim);
      for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
      const auto mix = ktm::forward(p, phi, config.sigma_floor);
      CHECK(std::abs(mix.alphas.sum() - 1.0) <= 1e-6);
      CHECK((mix.alphas.array() >= 0.0).all());
      CHECK((mix.sigmas.array() >= config.sigma_floor).all());
    }
  }
}
