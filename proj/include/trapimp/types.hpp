#pragma once

#include <Eigen/Core>

namespace trapimp {

using Vec3 = Eigen::Vector3d;

}  // namespace trapimp
