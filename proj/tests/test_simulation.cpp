#include "grsir/error.hpp"
#include "grsir/random.hpp"
#include "grsir/simulation.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace grsir;

TEST_CASE("philox known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  CounterRng a(9, StreamPurpose::Noise, 3), b(9, StreamPurpose::Noise, 3);
  CounterRng c(9, StreamPurpose::Noise, 4), d(9, StreamPurpose::Predictors, 3);
  bool differ_c = false, differ_d = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differ_c |= x != c.normal();
    differ_d |= x != d.normal();
  }
  CHECK(differ_c);
  CHECK(differ_d);
}

TEST_CASE("normal draws have unit moments") {
  CounterRng rng(123, StreamPurpose::User);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("random orthogonal matrices") {
  for (Index p : {1, 3, 20}) {
    const MatrixXd q = random_orthogonal(p, 5);
    CHECK(testing::max_abs(q.transpose() * q - MatrixXd::Identity(p, p)) <= 1e-10);
  }
  const MatrixXd one = random_orthogonal(1, 8);
  CHECK(std::abs(one(0, 0)) == 1.0);
  CHECK(random_orthogonal(10, 3) == random_orthogonal(10, 3));
  CHECK(testing::max_abs(random_orthogonal(10, 3) - random_orthogonal(10, 4)) > 1e-3);
}

TEST_CASE("population design") {
  const MatrixXd q = random_orthogonal(8, 2);
  const Population iso = make_population(8, 0.0, q);
  CHECK(testing::max_abs(iso.sigma - MatrixXd::Identity(8, 8)) < 1e-12);

  const Population pop = make_population(50, 2.0, random_orthogonal(50, 1));
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(pop.sigma);
  const double cond = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
  CHECK(cond == doctest::Approx(2500.0).epsilon(1e-6));
  CHECK(std::abs(pop.beta.squaredNorm() - 1.0) <= 1e-12);
  CHECK(pop.projection_sd == doctest::Approx(std::sqrt(pop.beta.dot(pop.sigma * pop.beta))));

  try {
    make_population(4, 1.0, random_orthogonal(4, 1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionTooSmall);
  }
}

TEST_CASE("noise-free model responses") {
  const Population pop = make_population(6, 1.0, random_orthogonal(6, 3));
  const Dataset d1 = sample_model(1, 200, pop, 0.0, 3);
  const double s = pop.projection_sd;
  for (Index i = 0; i < d1.n(); ++i) {
    CHECK(d1.y()(i) == std::sin(std::numbers::pi / (2.0 * s) * pop.beta.dot(d1.x().row(i).transpose())));
  }
  const Dataset d2 = sample_model(2, 200, pop, 0.0, 3);
  for (Index i = 0; i < d2.n(); ++i) {
    CHECK(std::abs(d2.y()(i) - std::abs(pop.beta.dot(d2.x().row(i).transpose()) / s - 0.5)) <= 1e-12);
  }
  // kink point
  MatrixXd at_kink = (pop.beta * (0.5 * s)).transpose();
  CHECK(std::abs(model_response(2, at_kink, pop, 0.0, 1)(0)) < 1e-12);
}

TEST_CASE("projection variance by the law of large numbers") {
  const Population pop = make_population(10, 1.5, random_orthogonal(10, 4));
  const MatrixXd x = sample_predictors(100000, pop.sigma, 4);
  const VectorXd t = x * pop.beta;
  const double var = (t.array() - t.mean()).square().mean();
  const double ratio = var / (pop.projection_sd * pop.projection_sd);
  CHECK(ratio >= 0.97);
  CHECK(ratio <= 1.03);
}

TEST_CASE("msc and vsc") {
  VectorXd beta = VectorXd::Zero(3);
  beta(0) = 1.0;
  MatrixXd same(3, 4);
  for (Index r = 0; r < 4; ++r) same.col(r) = beta;
  CHECK(msc(same, beta) == doctest::Approx(1.0));
  CHECK(vsc(same) == doctest::Approx(1.0));

  MatrixXd orth = MatrixXd::Zero(3, 2);
  orth(1, 0) = 1.0;
  orth(2, 1) = 1.0;
  CHECK(msc(orth, beta) == 0.0);
  CHECK(vsc(orth) == 0.0);

  // b2 at 60 degrees from beta = b1
  MatrixXd two = MatrixXd::Zero(3, 2);
  two(0, 0) = 1.0;
  two(0, 1) = 0.5;
  two(1, 1) = std::sqrt(3.0) / 2.0;
  CHECK(msc(two, beta) == doctest::Approx(0.625));
  CHECK(vsc(two) == doctest::Approx(0.25));

  // unnormalized inputs
  CHECK(msc(3.0 * two, beta) == doctest::Approx(0.625));
  CHECK_THROWS_AS(vsc(two.leftCols(1)), Error);
}

TEST_CASE("sign flips leave msc and vsc unchanged exactly") {
  std::mt19937_64 gen(6);
  MatrixXd dirs = testing::gaussian_matrix(gen, 7, 9);
  const VectorXd beta = testing::unit(testing::gaussian_matrix(gen, 7, 1).col(0));
  const double m = msc(dirs, beta), v = vsc(dirs);
  for (Index r = 0; r < 9; r += 2) dirs.col(r) = -dirs.col(r);
  CHECK(msc(dirs, beta) == m);
  CHECK(vsc(dirs) == v);
}

TEST_CASE("tau grids") {
  const std::vector<double> e = tau_grid(150, -5, 25, LogBase::Natural);
  REQUIRE(e.size() == 150);
  CHECK(e.front() == doctest::Approx(std::exp(-5.0)));
  CHECK(e.back() == doctest::Approx(std::exp(25.0)));
  const std::vector<double> ten = tau_grid(3, 0, 2, LogBase::Ten);
  CHECK(ten[1] == doctest::Approx(10.0));
  CHECK(tau_grid(1, 2, 5, LogBase::Natural)[0] == doctest::Approx(std::exp(2.0)));
}

namespace {

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.n = 60;
  c.p = 12;
  c.theta = 1.5;
  c.replicates = 6;
  c.seed = 3;
  c.tau_count = 7;
  c.log_tau_min = -2;
  c.log_tau_max = 6;
  c.cutoff = 5;
  return c;
}

std::string report_text(int exp, const ScenarioConfig& c) {
  std::ostringstream out;
  write_report_csv(out, run_experiment(exp, c));
  return out.str();
}

}  // namespace

TEST_CASE("experiment 1 layout and SIR constancy") {
  ScenarioConfig c = small_config();
  const CriterionReport r = run_experiment(1, c);
  CHECK(r.rows.size() == 6 * 7);
  for (const CriterionRow& row : r.rows) {
    CHECK(row.msc >= -1e-12);
    CHECK(row.msc <= 1 + 1e-12);
    CHECK(row.vsc >= -1e-12);
    CHECK(row.vsc <= 1 + 1e-12);
    CHECK(row.failures == 0);
  }
  std::vector<double> sir;
  for (const CriterionRow& row : r.rows)
    if (row.method == PriorKind::Sir) sir.push_back(row.msc);
  REQUIRE(sir.size() == 7);
  for (double v : sir) CHECK(v == doctest::Approx(sir[0]).epsilon(1e-9));

  std::ostringstream out;
  write_report_csv(out, r);
  const std::string text = out.str();
  CHECK(text.rfind("experiment,method,tau,theta,d,h,N,msc,vsc,mean_lambda,failures,seed\n", 0) == 0);
}

TEST_CASE("experiment 3 at d = p matches the full-space methods") {
  ScenarioConfig c = small_config();
  c.d_grid = {c.p};
  c.methods = {PriorKind::Ridge, PriorKind::PcaRidge, PriorKind::Tikhonov, PriorKind::PcaTikhonov};
  c.tau_count = 5;
  ScenarioConfig sweep = c;
  for (double tau : c.taus()) {
    sweep.tau_grid_override = {tau};
    const CriterionReport r = run_experiment(3, sweep);
    auto find = [&](PriorKind k) {
      for (const CriterionRow& row : r.rows)
        if (row.method == k) return row.msc;
      FAIL("missing row");
      return 0.0;
    };
    CHECK(std::abs(find(PriorKind::Ridge) - find(PriorKind::PcaRidge)) <= 1e-10);
    CHECK(std::abs(find(PriorKind::Tikhonov) - find(PriorKind::PcaTikhonov)) <= 1e-10);
  }
}

TEST_CASE("experiment 2 reports each theta once per method") {
  ScenarioConfig c = small_config();
  c.theta_grid = {0.0, 1.0, 2.0};
  const CriterionReport r = run_experiment(2, c);
  CHECK(r.rows.size() == 3 * 6);
}

TEST_CASE("reports are deterministic and thread-count independent") {
  ScenarioConfig c = small_config();
  const std::string serial = report_text(1, c);
  CHECK(serial == report_text(1, c));
  c.threads = 3;
  CHECK(serial == report_text(1, c));
  c.independent_replicates = true;
  CHECK(serial != report_text(1, c));
}

TEST_CASE("regularized methods run with n <= p") {
  ScenarioConfig c = small_config();
  c.n = 10;
  c.p = 12;
  c.methods = {PriorKind::Ridge, PriorKind::Tikhonov, PriorKind::PcaRidge};
  const CriterionReport r = run_experiment(1, c);
  for (const CriterionRow& row : r.rows) CHECK(row.failures == 0);
  c.methods = {PriorKind::Sir};
  const CriterionReport sir = run_experiment(1, c);
  for (const CriterionRow& row : sir.rows) CHECK(row.failures == c.replicates);
}

TEST_CASE("invalid configurations") {
  ScenarioConfig c = small_config();
  c.replicates = 1;
  CHECK_THROWS_AS(run_experiment(1, c), Error);
  c = small_config();
  c.model_id = 3;
  CHECK_THROWS_AS(run_experiment(1, c), Error);
  c = small_config();
  CHECK_THROWS_AS(run_experiment(4, c), Error);
}
