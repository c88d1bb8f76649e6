#include "oracles.hpp"

#include "sbridge/kernel.hpp"

#include <doctest.h>

#include <numbers>
#include <vector>

using namespace sbridge;

namespace {

TrainingSet line(std::initializer_list<double> xs) {
  Matrix m(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) m(0, k++) = x;
  return TrainingSet(m);
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

}  // namespace

TEST_SUITE("kernel") {
  TEST_CASE("kde of two points matches the two-component mixture") {
    const TrainingSet ts = line({0.0, 1.0});
    const DensityEstimate kde = fit_kde(ts);
    const double h = std::sqrt(0.5) * std::pow(4.0 / (3.0 * 2.0), 1.0 / 5.0);
    CHECK(kde.bandwidth() == doctest::Approx(h).epsilon(1e-14));
    const double phi = std::exp(-0.125 / (h * h)) / std::sqrt(2.0 * std::numbers::pi * h * h);
    CHECK(kde(vec({0.5})) == doctest::Approx(phi).epsilon(1e-13));
  }

  TEST_CASE("kde is positive far away and largest near the data") {
    std::mt19937_64 gen(1);
    const TrainingSet ts(oracle::random_matrix(2, 50, gen, 0.1));
    const DensityEstimate kde = fit_kde(ts);
    CHECK(kde(vec({1e3, -1e3})) > 0.0);
    CHECK(std::isfinite(kde.log_value(vec({1e8, 1e8}))));
    const Vector at = ts.sample(0);
    CHECK(kde(at) >= kde(Vector(at * 30.0 + Vector::Constant(2, 5.0))));
  }

  TEST_CASE("kde rejects a single sample and zero spread") {
    CHECK_THROWS_AS(fit_kde(line({1.0})), InvalidArgument);
    CHECK_THROWS_AS(fit_kde(line({2.0, 2.0, 2.0})), DegenerateDataError);
  }

  TEST_CASE("bandwidth profile hand values") {
    const std::vector<double> pi{1.0, 4.0};
    const BandwidthProfile p = bandwidth_profile(pi, -0.5);
    CHECK(p.z_norm == doctest::Approx(2.5));
    CHECK(p.rho[0] == doctest::Approx(1.5811388300841898).epsilon(1e-12));
    CHECK(p.rho[1] == doctest::Approx(0.7905694150420949).epsilon(1e-12));
  }

  TEST_CASE("bandwidth profile trivial cases and scale invariance") {
    const std::vector<double> pi{0.3, 1.7, 0.01, 5.0};
    CHECK(bandwidth_profile(pi, 0.0).rho.isApprox(Vector::Ones(4)));
    const std::vector<double> flat(5, 0.42);
    CHECK((bandwidth_profile(flat, -0.7).rho.array() - 1.0).abs().maxCoeff() < 1e-14);
    std::vector<double> scaled;
    for (double x : pi) scaled.push_back(x * 123.0);
    CHECK(bandwidth_profile(pi, -0.3).rho.isApprox(bandwidth_profile(scaled, -0.3).rho, 1e-13));
    CHECK_THROWS_AS(bandwidth_profile(pi, 0.5), InvalidArgument);
  }

  TEST_CASE("kernel matrix hand values") {
    const Matrix same = kernel_matrix(line({0.3, 0.3}), KernelSpec::fixed(line({0.3, 0.3}), 0.7));
    CHECK(same.isApprox(Matrix::Ones(2, 2)));
    const TrainingSet ts = line({0.0, 1.0});
    const Matrix t = kernel_matrix(ts, KernelSpec::fixed(ts, 0.5));
    CHECK(t(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  }

  TEST_CASE("kernel matrix is symmetric with unit diagonal and matches the direct formula") {
    std::mt19937_64 gen(7);
    const TrainingSet ts(oracle::random_matrix(3, 40, gen));
    for (bool variable : {false, true}) {
      const KernelSpec spec = variable ? KernelSpec::variable(ts, 0.3, -0.4) : KernelSpec::fixed(ts, 0.3);
      const Matrix t = kernel_matrix(ts, spec);
      CHECK((t - t.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(t.diagonal().isApprox(Vector::Ones(40)));
      CHECK(t.maxCoeff() <= 1.0);
      CHECK(t.minCoeff() > 0.0);
      const Matrix ref = oracle::kernel(ts.data(), 0.3, spec.rho);
      CHECK((t - ref).cwiseAbs().maxCoeff() < 1e-13);
    }
  }

  TEST_CASE("covariance metric uses (K_i + K_j)^-1") {
    std::mt19937_64 gen(3);
    Matrix x = oracle::random_matrix(2, 15, gen);
    x.row(1) *= 3.0;
    const TrainingSet ts(x);
    const KernelSpec spec = KernelSpec::fixed(ts, 0.4, Metric::EmpiricalCovariance);
    const Matrix t = kernel_matrix(ts, spec);
    const Matrix a = empirical_covariance(ts);
    const Matrix inv = (2.0 * a).inverse();
    for (Eigen::Index i = 0; i < 15; ++i)
      for (Eigen::Index j = 0; j < 15; ++j) {
        const Vector d = x.col(i) - x.col(j);
        CHECK(t(i, j) == doctest::Approx(std::exp(-d.dot(inv * d) / 0.8)).epsilon(1e-12));
      }
  }

  TEST_CASE("kernel vector hand values and consistency with the matrix") {
    const TrainingSet ts = line({0.0, 1.0});
    const Vector tx = kernel_vector(ts, KernelSpec::fixed(ts, 0.5), vec({0.5}));
    CHECK(tx[0] == doctest::Approx(std::exp(-0.125)).epsilon(1e-15));
    CHECK(tx[1] == doctest::Approx(0.8825).epsilon(1e-4));

    std::mt19937_64 gen(11);
    const TrainingSet big(oracle::random_matrix(2, 30, gen));
    for (bool variable : {false, true}) {
      const KernelSpec spec = variable ? KernelSpec::variable(big, 0.2, -0.5) : KernelSpec::fixed(big, 0.2);
      const Matrix t = kernel_matrix(big, spec);
      for (std::size_t j = 0; j < 30; ++j) {
        const Vector col = kernel_vector(big, spec, big.sample(j));
        CHECK((col - t.col(static_cast<Eigen::Index>(j))).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }

  TEST_CASE("kernel vector far from the data is tiny but positive, log form stays finite") {
    const TrainingSet ts = line({0.0, 1.0});
    const KernelSpec spec = KernelSpec::fixed(ts, 0.5);
    const Vector tx = kernel_vector(ts, spec, vec({30.0}));
    CHECK(tx.maxCoeff() < 1e-30);
    CHECK(tx.minCoeff() > 0.0);
    const KernelEvaluator k(ts, spec);
    Vector logs;
    k.log_vector(vec({1e150}), logs);
    CHECK(logs.allFinite());
  }

  TEST_CASE("streamed products match the dense matrix") {
    std::mt19937_64 gen(5);
    const TrainingSet ts(oracle::random_matrix(4, 60, gen));
    const KernelEvaluator k(ts, KernelSpec::variable(ts, 0.5, -0.2));
    const Vector v = Vector::LinSpaced(60, 0.1, 2.0);
    CHECK((k.apply(v) - k.dense() * v).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("spec validation") {
    const TrainingSet ts = line({0.0, 1.0, 2.0});
    CHECK_THROWS_AS(KernelSpec::fixed(ts, 0.0), InvalidArgument);
    CHECK_THROWS_AS(KernelSpec::fixed(ts, -1.0), InvalidArgument);
    KernelSpec spec = KernelSpec::fixed(ts, 1.0);
    spec.rho = Vector::Ones(2);
    CHECK_THROWS_AS(spec.validate(ts), InvalidArgument);
  }
}
