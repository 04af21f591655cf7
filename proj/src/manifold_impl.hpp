#ifndef MINFER_MANIFOLD_IMPL_H
#define MINFER_MANIFOLD_IMPL_H

#include <memory>

#include "minfer/manifold.hpp"

namespace minfer::detail {

std::shared_ptr<const Manifold> make_sphere(const ManifoldDescriptor& desc,
                                            const VectorXd& anchor);
std::shared_ptr<const Manifold> make_stiefel(const ManifoldDescriptor& desc,
                                             const VectorXd& anchor);
std::shared_ptr<const Manifold> make_fixed_rank(const ManifoldDescriptor& desc,
                                                const VectorXd& anchor);
std::shared_ptr<const Manifold> make_rank_one_tensor(const ManifoldDescriptor& desc,
                                                     const VectorXd& anchor);

}  // namespace minfer::detail

#endif
