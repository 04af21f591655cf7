#include <doctest.h>

#include <cmath>
#include <memory>

#include "minfer/loss.hpp"
#include "minfer/rng.hpp"

using namespace minfer;

namespace {

VectorXd random_ambient(RngStream& rng, int size) {
  VectorXd w(size);
  for (int i = 0; i < size; ++i) w(i) = rng.normal();
  return w;
}

std::shared_ptr<const Manifold> random_instance(const ManifoldDescriptor& desc,
                                                RngStream& rng) {
  const auto scratch = make_manifold(desc, canonical_point(desc));
  const VectorXd x = scratch->project(random_ambient(rng, desc.ambient_size()));
  return scratch->with_anchor(x);
}

Dataset gaussian_cloud(const Manifold& man, RngStream& rng, int n, double scale) {
  Dataset d;
  d.samples.resize(man.ambient_size(), n);
  for (int i = 0; i < n; ++i) {
    d.samples.col(i) = man.anchor() + scale * random_ambient(rng, man.ambient_size());
  }
  return d;
}

Dataset sphere_cloud(const Manifold& man, RngStream& rng, int n, double spread) {
  Dataset d;
  d.samples.resize(man.ambient_size(), n);
  for (int i = 0; i < n; ++i) {
    VectorXd y = man.anchor() + spread * random_ambient(rng, man.ambient_size());
    d.samples.col(i) = y / y.norm();
  }
  return d;
}

}  // namespace

TEST_CASE("gaussian loss value is half the squared distance to the sample") {
  VectorXd x(3);
  x << 0, 1, 0;
  const auto man = make_manifold(sphere_descriptor(3), x);
  const LossModel model(LossKind::GaussianLocation, man);
  Dataset d;
  d.samples.resize(3, 1);
  d.samples.col(0) << 0, 3, 0;
  CHECK(model.loss_value(d, x) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(model.per_sample_loss_values(d, x)(0) == doctest::Approx(2.0));
}

TEST_CASE("gaussian ambient gradient is the residual to the sample mean") {
  RngStream rng(31, streams::kTest);
  const auto man = random_instance(stiefel_descriptor(4, 2), rng);
  const LossModel model(LossKind::GaussianLocation, man);
  const Dataset d = gaussian_cloud(*man, rng, 17, 0.2);
  const VectorXd x = man->anchor();
  const VectorXd g = model.ambient_gradient(d, x);
  const VectorXd mean = d.samples.rowwise().mean();
  CHECK((g - (x - mean)).norm() <= 1e-13);
}

TEST_CASE("chart gradient vanishes at the projected mean on the sphere") {
  RngStream rng(32, streams::kTest);
  const auto scratch = make_manifold(sphere_descriptor(5), canonical_point(sphere_descriptor(5)));
  Dataset d;
  d.samples.resize(5, 40);
  for (int i = 0; i < 40; ++i) d.samples.col(i) = random_ambient(rng, 5);
  const VectorXd mean = d.samples.rowwise().mean();
  const VectorXd xhat = scratch->project(mean);
  const LossModel model(LossKind::GaussianLocation, scratch->with_anchor(xhat));
  CHECK(model.chart_gradient(d, xhat).norm() <= 1e-12);
}

TEST_CASE("gaussian chart hessian on the sphere scales with the mean norm") {
  // at x = m/|m| the sphere chart Hessian of the Gaussian loss is |m| * I
  RngStream rng(33, streams::kTest);
  VectorXd m = random_ambient(rng, 4);
  const auto scratch = make_manifold(sphere_descriptor(4), canonical_point(sphere_descriptor(4)));
  const VectorXd x = scratch->project(m);
  const auto man = scratch->with_anchor(x);
  Dataset d;
  d.samples.resize(4, 2);
  VectorXd off = random_ambient(rng, 4);
  d.samples.col(0) = m + off;
  d.samples.col(1) = m - off;  // mean is exactly m
  const LossModel model(LossKind::GaussianLocation, man);
  const MatrixXd H = model.chart_hessian(d, x);
  CHECK((H - m.norm() * MatrixXd::Identity(3, 3)).norm() <= 1e-12);
}

TEST_CASE("per-sample chart gradients average to the full chart gradient") {
  RngStream rng(34, streams::kTest);
  for (const auto& desc : {sphere_descriptor(3), stiefel_descriptor(4, 2),
                           fixed_rank_descriptor(2, 4, 4),
                           rank_one_tensor_descriptor({3, 3, 3})}) {
    const auto man = random_instance(desc, rng);
    const LossModel model(LossKind::GaussianLocation, man);
    const Dataset d = gaussian_cloud(*man, rng, 13, 0.15);
    const VectorXd x = man->anchor();
    const MatrixXd rows = model.per_sample_chart_gradients(d, x);
    REQUIRE(rows.rows() == 13);
    REQUIRE(rows.cols() == man->dim());
    const VectorXd mean_row = rows.colwise().mean();
    CHECK((mean_row - model.chart_gradient(d, x)).norm() <= 1e-12);
  }
}

TEST_CASE("chart derivatives match finite differences for the gaussian loss") {
  RngStream rng(35, streams::kTest);
  for (const auto& desc : {sphere_descriptor(3), stiefel_descriptor(4, 2),
                           fixed_rank_descriptor(2, 4, 4),
                           rank_one_tensor_descriptor({3, 3, 3})}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto man = random_instance(desc, rng);
      const LossModel model(LossKind::GaussianLocation, man);
      const Dataset d = gaussian_cloud(*man, rng, 9, 0.2);
      const VectorXd x = man->anchor();
      const VectorXd origin = VectorXd::Zero(man->dim());

      const VectorXd g = model.chart_gradient(d, x);
      const VectorXd g_fd = fd_chart_gradient_at(model, d, x, origin);
      CHECK((g - g_fd).norm() <= 1e-5 * (1.0 + g.norm()));

      const MatrixXd H = model.chart_hessian(d, x);
      const MatrixXd H_fd = fd_chart_hessian_at(model, d, x, origin);
      CHECK((H - H_fd).norm() <= 1e-4 * (1.0 + H.norm()));
    }
  }
}

TEST_CASE("chart derivatives match finite differences for the barycenter loss") {
  RngStream rng(36, streams::kTest);
  const auto desc = sphere_descriptor(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto man = random_instance(desc, rng);
    const LossModel model(LossKind::SphereBarycenter, man);
    const Dataset d = sphere_cloud(*man, rng, 11, 0.3);
    const VectorXd x = man->anchor();
    const VectorXd origin = VectorXd::Zero(man->dim());

    const VectorXd g = model.chart_gradient(d, x);
    const VectorXd g_fd = fd_chart_gradient_at(model, d, x, origin);
    CHECK((g - g_fd).norm() <= 1e-5 * (1.0 + g.norm()));

    const MatrixXd H = model.chart_hessian(d, x);
    const MatrixXd H_fd = fd_chart_hessian_at(model, d, x, origin);
    CHECK((H - H_fd).norm() <= 1e-4 * (1.0 + H.norm()));
  }
}

TEST_CASE("barycenter chart hessian matches its closed form") {
  // per sample: (theta cot theta) I + (1 - theta cot theta)/sin^2 theta * w w^T,
  // with w the tangent coordinates of the sample
  RngStream rng(37, streams::kTest);
  const auto man = random_instance(sphere_descriptor(3), rng);
  const LossModel model(LossKind::SphereBarycenter, man);
  const Dataset d = sphere_cloud(*man, rng, 7, 0.4);
  const VectorXd x = man->anchor();
  const MatrixXd B = man->chart_basis(x);

  MatrixXd H_ref = MatrixXd::Zero(2, 2);
  for (int i = 0; i < 7; ++i) {
    const double cosv = x.dot(d.samples.col(i));
    const double theta = std::acos(std::min(1.0, std::max(-1.0, cosv)));
    const VectorXd w = B.transpose() * d.samples.col(i);
    double ct = 1.0, ratio = 1.0 / 3.0;
    if (theta > 1e-8) {
      ct = theta * std::cos(theta) / std::sin(theta);
      ratio = (1.0 - ct) / (std::sin(theta) * std::sin(theta));
    }
    H_ref += ct * MatrixXd::Identity(2, 2) + ratio * w * w.transpose();
  }
  H_ref /= 7.0;
  CHECK((model.chart_hessian(d, x) - H_ref).norm() <= 1e-10);
}

TEST_CASE("barycenter gradient points along the intrinsic mean direction") {
  // single sample: chart gradient = -theta * unit tangent toward the sample
  const auto desc = sphere_descriptor(3);
  VectorXd x(3);
  x << 1, 0, 0;
  const auto man = make_manifold(desc, x);
  const LossModel model(LossKind::SphereBarycenter, man);
  Dataset d;
  d.samples.resize(3, 1);
  const double theta = 0.7;
  d.samples.col(0) << std::cos(theta), std::sin(theta), 0;
  const VectorXd g = model.chart_gradient(d, x);
  CHECK(g.norm() == doctest::Approx(theta).epsilon(1e-12));
  const VectorXd back = man->chart_basis(x) * g;
  // gradient in ambient space is tangent and opposes the sample direction
  CHECK(back.dot(d.samples.col(0)) < 0.0);
  CHECK(std::abs(back.dot(x)) <= 1e-12);
}

TEST_CASE("hessian application is self-adjoint on random tangents") {
  RngStream rng(38, streams::kTest);
  for (const auto& desc : {sphere_descriptor(3), stiefel_descriptor(4, 2),
                           fixed_rank_descriptor(2, 4, 4),
                           rank_one_tensor_descriptor({3, 3, 3})}) {
    const auto man = random_instance(desc, rng);
    const LossModel model(LossKind::GaussianLocation, man);
    const Dataset d = gaussian_cloud(*man, rng, 8, 0.2);
    const MatrixXd H = model.chart_hessian_unsymmetrized(d, man->anchor());
    CHECK((H - H.transpose()).norm() <= 1e-10 * (1.0 + H.norm()));
  }
}

TEST_CASE("barycenter loss rejects non-sphere manifolds and bad samples") {
  const auto desc = stiefel_descriptor(4, 2);
  const auto man = make_manifold(desc, canonical_point(desc));
  CHECK_THROWS_AS(LossModel(LossKind::SphereBarycenter, man), UsageError);

  const auto s3 = sphere_descriptor(3);
  const auto sman = make_manifold(s3, canonical_point(s3));
  const LossModel model(LossKind::SphereBarycenter, sman);
  Dataset d;
  d.samples.resize(3, 2);
  d.samples.col(0) << 1, 0, 0;
  d.samples.col(1) << 0, 2, 0;  // not unit norm
  CHECK_THROWS_AS(model.validate(d), DataError);
}

TEST_CASE("barycenter flags an antipodal sample") {
  VectorXd x(3);
  x << 0, 0, 1;
  const auto man = make_manifold(sphere_descriptor(3), x);
  const LossModel model(LossKind::SphereBarycenter, man);
  Dataset d;
  d.samples.resize(3, 1);
  d.samples.col(0) << 0, 0, -1;
  CHECK_THROWS_AS(model.loss_value(d, x), AntipodalSampleError);
}

TEST_CASE("validate rejects shape mismatches and non-finite entries") {
  const auto desc = sphere_descriptor(3);
  const auto man = make_manifold(desc, canonical_point(desc));
  const LossModel model(LossKind::GaussianLocation, man);
  Dataset narrow;
  narrow.samples.resize(2, 4);
  narrow.samples.setZero();
  CHECK_THROWS_AS(model.validate(narrow), DataError);
  Dataset nan_data;
  nan_data.samples.resize(3, 2);
  nan_data.samples.setZero();
  nan_data.samples(1, 1) = std::nan("");
  CHECK_THROWS_AS(model.validate(nan_data), DataError);
  Dataset empty;
  empty.samples.resize(3, 0);
  CHECK_THROWS_AS(model.validate(empty), DataError);
}

TEST_CASE("loss parsing round trips") {
  CHECK(parse_loss("gaussian") == LossKind::GaussianLocation);
  CHECK(parse_loss("barycenter") == LossKind::SphereBarycenter);
  CHECK(loss_name(LossKind::GaussianLocation) == "gaussian");
  CHECK(loss_name(LossKind::SphereBarycenter) == "barycenter");
  CHECK_THROWS_AS(parse_loss("huber"), UsageError);
}
