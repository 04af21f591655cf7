#include "minfer/manifold.hpp"

#include <charconv>
#include <numeric>
#include <sstream>

#include "manifold_impl.hpp"

namespace minfer {

void Manifold::require_feasible(const VectorXd& x) const {
  if (x.size() != ambient_size()) {
    throw DataError("point has " + std::to_string(x.size()) + " entries, manifold " +
                    desc_.name + " expects " + std::to_string(ambient_size()));
  }
  check_finite(x, "manifold point");
  const double res = feasibility(x);
  if (!(res <= 1e-10)) {
    std::ostringstream os;
    os << "point infeasible for " << desc_.name << " (residual " << res << ")";
    throw InfeasiblePointError(os.str());
  }
}

double Manifold::metric_inner(const VectorXd&, const VectorXd& a, const VectorXd& b) const {
  return a.dot(b);
}

double Manifold::normal_space_residual(const VectorXd& x, const VectorXd& y,
                                       ChartFlags* fl) const {
  const VectorXd v = inverse_retract(x, y, fl);
  const VectorXd defect = x + chart_basis(x) * v - y;
  return tangent_project(x, defect).norm();
}

double Manifold::distance(const VectorXd& x, const VectorXd& y) const {
  return (x - y).norm();
}

namespace {

int prod(const std::vector<int>& v) {
  return std::accumulate(v.begin(), v.end(), 1, std::multiplies<int>());
}

}  // namespace

ManifoldDescriptor sphere_descriptor(int p) {
  if (p < 2) throw UsageError("sphere dimension must be >= 2");
  ManifoldDescriptor d;
  d.kind = ManifoldKind::Sphere;
  d.ambient_shape = {p};
  d.rank = 0;
  d.intrinsic_dim = p - 1;
  d.name = "sphere:" + std::to_string(p);
  return d;
}

ManifoldDescriptor stiefel_descriptor(int p, int r) {
  if (r < 1 || r >= p) throw UsageError("stiefel requires 1 <= r < p");
  ManifoldDescriptor d;
  d.kind = ManifoldKind::Stiefel;
  d.ambient_shape = {p, r};
  d.rank = 0;
  d.intrinsic_dim = r * (r - 1) / 2 + (p - r) * r;
  d.name = "stiefel:" + std::to_string(p) + "," + std::to_string(r);
  return d;
}

ManifoldDescriptor fixed_rank_descriptor(int r, int p1, int p2) {
  if (r < 1 || r >= p1 || r >= p2) {
    throw UsageError("fixedrank requires 1 <= r < min(p1,p2)");
  }
  ManifoldDescriptor d;
  d.kind = ManifoldKind::FixedRank;
  d.ambient_shape = {p1, p2};
  d.rank = r;
  d.intrinsic_dim = (p1 + p2 - r) * r;
  d.name = "fixedrank:" + std::to_string(r) + "," + std::to_string(p1) + "," +
           std::to_string(p2);
  return d;
}

ManifoldDescriptor rank_one_tensor_descriptor(const std::vector<int>& dims) {
  if (dims.size() < 2) throw UsageError("rank1tensor requires order >= 2");
  for (int p : dims) {
    if (p < 2) throw UsageError("rank1tensor mode sizes must be >= 2");
  }
  ManifoldDescriptor d;
  d.kind = ManifoldKind::RankOneTensor;
  d.ambient_shape = dims;
  d.rank = 0;
  d.intrinsic_dim = 1;
  for (int p : dims) d.intrinsic_dim += p - 1;
  d.name = "rank1tensor:";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) d.name += ",";
    d.name += std::to_string(dims[i]);
  }
  (void)prod(dims);
  return d;
}

ManifoldDescriptor parse_manifold(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw UsageError("manifold spec '" + text + "' missing ':' (e.g. sphere:3)");
  }
  const std::string name = text.substr(0, colon);
  std::vector<int> nums;
  size_t pos = colon + 1;
  while (pos <= text.size()) {
    const size_t comma = std::min(text.find(',', pos), text.size());
    int value = 0;
    const auto [ptr, ec] =
        std::from_chars(text.data() + pos, text.data() + comma, value);
    if (ec != std::errc{} || ptr != text.data() + comma) {
      throw UsageError("manifold spec '" + text + "' has a malformed size list");
    }
    nums.push_back(value);
    pos = comma + 1;
  }
  if (name == "sphere") {
    if (nums.size() != 1) throw UsageError("sphere takes one size: sphere:P");
    return sphere_descriptor(nums[0]);
  }
  if (name == "stiefel") {
    if (nums.size() != 2) throw UsageError("stiefel takes two sizes: stiefel:P,R");
    return stiefel_descriptor(nums[0], nums[1]);
  }
  if (name == "fixedrank") {
    if (nums.size() != 3) {
      throw UsageError("fixedrank takes three sizes: fixedrank:R,P1,P2");
    }
    return fixed_rank_descriptor(nums[0], nums[1], nums[2]);
  }
  if (name == "rank1tensor") {
    return rank_one_tensor_descriptor(nums);
  }
  throw UsageError("unknown manifold '" + name + "'");
}

VectorXd canonical_point(const ManifoldDescriptor& desc) {
  VectorXd x = VectorXd::Zero(desc.ambient_size());
  switch (desc.kind) {
    case ManifoldKind::Sphere:
      x(0) = 1.0;
      break;
    case ManifoldKind::Stiefel: {
      const int p = desc.ambient_shape[0];
      const int r = desc.ambient_shape[1];
      for (int j = 0; j < r; ++j) x(j * p + j) = 1.0;
      break;
    }
    case ManifoldKind::FixedRank: {
      const int p1 = desc.ambient_shape[0];
      for (int i = 0; i < desc.rank; ++i) x(i * p1 + i) = desc.rank - i;
      break;
    }
    case ManifoldKind::RankOneTensor:
      x(0) = 1.0;
      break;
  }
  return x;
}

std::shared_ptr<const Manifold> make_manifold(const ManifoldDescriptor& desc,
                                              const VectorXd& anchor) {
  switch (desc.kind) {
    case ManifoldKind::Sphere:
      return detail::make_sphere(desc, anchor);
    case ManifoldKind::Stiefel:
      return detail::make_stiefel(desc, anchor);
    case ManifoldKind::FixedRank:
      return detail::make_fixed_rank(desc, anchor);
    case ManifoldKind::RankOneTensor:
      return detail::make_rank_one_tensor(desc, anchor);
  }
  throw UsageError("unknown manifold kind");
}

}  // namespace minfer
