#ifndef MINFER_COMMON_H
#define MINFER_COMMON_H

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace minfer {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/* ---- error types ----
 * Hard precondition violations throw; recoverable chart events (leaving the
 * retraction domain, a target outside a chart, a zero-variance direction)
 * are reported through ChartFlags instead so replicate loops never abort. */

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct UsageError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};

struct RankDeficientError : NumericalError {
  using NumericalError::NumericalError;
};
struct AnchorMismatchError : NumericalError {
  using NumericalError::NumericalError;
};
struct NonFiniteError : NumericalError {
  using NumericalError::NumericalError;
};
struct NoConvergenceError : NumericalError {
  using NumericalError::NumericalError;
};
struct AntipodalSampleError : NumericalError {
  using NumericalError::NumericalError;
};
struct ZeroVarianceError : NumericalError {
  using NumericalError::NumericalError;
};
struct InfeasiblePointError : NumericalError {
  using NumericalError::NumericalError;
};

/* Soft per-call chart events. Accumulated, never reset by callees. */
struct ChartFlags {
  bool domain_escape = false;   // retraction input outside its domain; center returned
  bool out_of_chart = false;    // inverse retraction target outside the chart
  bool no_convergence = false;  // iterative chart inversion failed
  bool zero_variance = false;   // studentizing variance vanished
  bool singular = false;        // rank-deficient covariance/Hessian encountered

  bool any() const {
    return domain_escape || out_of_chart || no_convergence || zero_variance || singular;
  }
  void merge(const ChartFlags& o) {
    domain_escape |= o.domain_escape;
    out_of_chart |= o.out_of_chart;
    no_convergence |= o.no_convergence;
    zero_variance |= o.zero_variance;
    singular |= o.singular;
  }
};

enum class ManifoldKind { Sphere, Stiefel, FixedRank, RankOneTensor };

/* Ambient shape conventions (data always flattened column-major):
 *   sphere          {p}
 *   stiefel         {p, r}
 *   fixed-rank      {p1, p2} with rank r kept separately
 *   rank-one tensor {p1, ..., pk}
 */
struct ManifoldDescriptor {
  ManifoldKind kind;
  std::vector<int> ambient_shape;
  int rank = 0;  // fixed-rank only
  int intrinsic_dim = 0;
  std::string name;

  int ambient_size() const {
    int n = 1;
    for (int s : ambient_shape) n *= s;
    return n;
  }
};

/* A point in the ambient space of some manifold, flattened column-major. */
struct AmbientPoint {
  VectorXd data;
  ManifoldDescriptor desc;
};

/* Chart coordinates relative to a center point. */
struct ChartVector {
  VectorXd coords;
  VectorXd center;
};

/* Orthonormal chart basis at a center: column j is the flattened ambient
 * representation of the j-th coordinate direction. */
struct ChartBasis {
  MatrixXd vectors;  // ambient_size x intrinsic_dim
  VectorXd center;
  VectorXd anchor;
};

inline void check_finite(const VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteError(std::string(what) + ": non-finite values");
}
inline void check_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + ": non-finite values");
}

}  // namespace minfer

#endif
