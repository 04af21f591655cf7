#include "minfer/loss.hpp"

#include <cmath>

#include "minfer/fd.hpp"

namespace minfer {

namespace {

/* theta/sin(theta) and friends for the squared geodesic distance on the
 * sphere, stable through the coincident limit t -> 1. t must already be
 * clamped away from +-1. */
struct BarycenterTerms {
  double c;      // theta / sin(theta)
  double ct;     // c * t = theta * cot(theta)
  double ratio;  // (1 - c t) / (1 - t^2)
  double theta;
};

BarycenterTerms barycenter_terms(double t) {
  BarycenterTerms out;
  out.theta = std::acos(t);
  const double th2 = out.theta * out.theta;
  if (out.theta < 1e-4) {
    out.c = 1.0 + th2 / 6.0;
    out.ct = 1.0 - th2 / 3.0;
    out.ratio = 1.0 / 3.0 + 2.0 * th2 / 15.0;
  } else {
    const double s = std::sin(out.theta);
    out.c = out.theta / s;
    out.ct = out.c * t;
    out.ratio = (1.0 - out.ct) / (s * s);
  }
  return out;
}

double clamp_cos(double t) {
  const double lim = 1.0 - 1e-12;
  return t < -lim ? -lim : (t > lim ? lim : t);
}

}  // namespace

LossKind parse_loss(const std::string& text) {
  if (text == "gaussian") return LossKind::GaussianLocation;
  if (text == "barycenter") return LossKind::SphereBarycenter;
  throw UsageError("unknown loss '" + text + "' (expected gaussian|barycenter)");
}

std::string loss_name(LossKind kind) {
  return kind == LossKind::GaussianLocation ? "gaussian" : "barycenter";
}

LossModel::LossModel(LossKind kind, std::shared_ptr<const Manifold> manifold)
    : kind_(kind), manifold_(std::move(manifold)) {
  if (!manifold_) throw UsageError("loss model needs a manifold");
  if (kind_ == LossKind::SphereBarycenter &&
      manifold_->descriptor().kind != ManifoldKind::Sphere) {
    throw UsageError("barycenter loss is defined on the sphere only");
  }
}

LossModel LossModel::with_manifold(std::shared_ptr<const Manifold> manifold) const {
  return LossModel(kind_, std::move(manifold));
}

void LossModel::validate(const Dataset& data) const {
  if (data.n() < 1) throw DataError("empty dataset");
  if (data.sample_size() != manifold_->ambient_size()) {
    throw DataError("sample size " + std::to_string(data.sample_size()) +
                    " does not match ambient size " + std::to_string(manifold_->ambient_size()));
  }
  if (!data.samples.allFinite()) throw DataError("dataset holds non-finite values");
  if (kind_ == LossKind::SphereBarycenter) {
    for (int i = 0; i < data.n(); ++i) {
      if (std::abs(data.samples.col(i).norm() - 1.0) > 1e-8) {
        throw DataError("barycenter sample " + std::to_string(i) + " is not on the sphere");
      }
    }
  }
}

double LossModel::loss_value(const Dataset& data, const VectorXd& x) const {
  return per_sample_loss_values(data, x).mean();
}

VectorXd LossModel::per_sample_loss_values(const Dataset& data, const VectorXd& x) const {
  const int n = data.n();
  VectorXd out(n);
  if (kind_ == LossKind::GaussianLocation) {
    for (int i = 0; i < n; ++i) out(i) = 0.5 * (data.samples.col(i) - x).squaredNorm();
    return out;
  }
  for (int i = 0; i < n; ++i) {
    const double raw = data.samples.col(i).dot(x);
    if (raw <= -1.0 + 1e-12) {
      throw AntipodalSampleError("sample " + std::to_string(i) + " is antipodal to the center");
    }
    const double th = std::acos(clamp_cos(raw));
    out(i) = 0.5 * th * th;
  }
  return out;
}

VectorXd LossModel::ambient_gradient(const Dataset& data, const VectorXd& x) const {
  const int n = data.n();
  if (kind_ == LossKind::GaussianLocation) {
    return x - data.samples.rowwise().mean();
  }
  VectorXd g = VectorXd::Zero(x.size());
  for (int i = 0; i < n; ++i) {
    const double raw = data.samples.col(i).dot(x);
    if (raw <= -1.0 + 1e-12) {
      throw AntipodalSampleError("sample " + std::to_string(i) + " is antipodal to the center");
    }
    g -= barycenter_terms(clamp_cos(raw)).c * data.samples.col(i);
  }
  return g / n;
}

VectorXd LossModel::chart_gradient(const Dataset& data, const VectorXd& x) const {
  return manifold_->chart_basis(x).transpose() * ambient_gradient(data, x);
}

MatrixXd LossModel::per_sample_chart_gradients(const Dataset& data, const VectorXd& x) const {
  const MatrixXd basis = manifold_->chart_basis(x);
  const int n = data.n();
  MatrixXd rows(n, basis.cols());
  if (kind_ == LossKind::GaussianLocation) {
    for (int i = 0; i < n; ++i) {
      rows.row(i) = (basis.transpose() * (x - data.samples.col(i))).transpose();
    }
    return rows;
  }
  for (int i = 0; i < n; ++i) {
    const double raw = data.samples.col(i).dot(x);
    if (raw <= -1.0 + 1e-12) {
      throw AntipodalSampleError("sample " + std::to_string(i) + " is antipodal to the center");
    }
    const double c = barycenter_terms(clamp_cos(raw)).c;
    rows.row(i) = (-c * (basis.transpose() * data.samples.col(i))).transpose();
  }
  return rows;
}

VectorXd LossModel::ambient_hess_apply(const Dataset& data, const VectorXd& x,
                                       const VectorXd& xi) const {
  if (kind_ == LossKind::GaussianLocation) return xi;
  const int n = data.n();
  VectorXd out = VectorXd::Zero(x.size());
  for (int i = 0; i < n; ++i) {
    const double t = clamp_cos(data.samples.col(i).dot(x));
    out += barycenter_terms(t).ratio * data.samples.col(i).dot(xi) * data.samples.col(i);
  }
  return out / n;
}

MatrixXd LossModel::chart_hessian_unsymmetrized(const Dataset& data, const VectorXd& x) const {
  const MatrixXd basis = manifold_->chart_basis(x);
  const int p = static_cast<int>(basis.cols());
  const VectorXd g = ambient_gradient(data, x);
  MatrixXd hess(p, p);
  for (int j = 0; j < p; ++j) {
    const VectorXd xi = basis.col(j);
    const VectorXd w = manifold_->riemannian_hess_apply(x, g, ambient_hess_apply(data, x, xi), xi);
    for (int i = 0; i < p; ++i) hess(i, j) = manifold_->metric_inner(x, basis.col(i), w);
  }
  return hess;
}

MatrixXd LossModel::chart_hessian(const Dataset& data, const VectorXd& x) const {
  const MatrixXd h = chart_hessian_unsymmetrized(data, x);
  return 0.5 * (h + h.transpose());
}

VectorXd fd_chart_gradient_at(const LossModel& model, const Dataset& data, const VectorXd& x,
                              const VectorXd& v, double h) {
  const auto& man = *model.manifold();
  const auto f = [&](const VectorXd& w) { return model.loss_value(data, man.retract(x, w)); };
  return fd_gradient(f, v, h);
}

MatrixXd fd_chart_hessian_at(const LossModel& model, const Dataset& data, const VectorXd& x,
                             const VectorXd& v, double h) {
  const auto& man = *model.manifold();
  const auto f = [&](const VectorXd& w) { return model.loss_value(data, man.retract(x, w)); };
  return fd_hessian(f, v, h);
}

MatrixXd fd_per_sample_chart_gradients_at(const LossModel& model, const Dataset& data,
                                          const VectorXd& x, const VectorXd& v, double h) {
  const auto& man = *model.manifold();
  const int p = static_cast<int>(v.size());
  MatrixXd rows(data.n(), p);
  VectorXd w = v;
  for (int j = 0; j < p; ++j) {
    w(j) = v(j) + h;
    const VectorXd up = model.per_sample_loss_values(data, man.retract(x, w));
    w(j) = v(j) - h;
    const VectorXd dn = model.per_sample_loss_values(data, man.retract(x, w));
    w(j) = v(j);
    rows.col(j) = (up - dn) / (2.0 * h);
  }
  return rows;
}

}  // namespace minfer
