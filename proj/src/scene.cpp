#include "weathergs/scene.hpp"

namespace wgs {

Vec3 world_to_camera(const Camera& camera, const Vec3& p_world) {
    return camera.rotation_wc * p_world + camera.translation_wc;
}

Mat3 covariance_from_params(const Quat& rotation, const Vec3& log_scales) {
    const Mat3 r = rotation.rotation_matrix();
    const Mat3 s2 = Mat3::diag(std::exp(2.0 * log_scales.x),
                               std::exp(2.0 * log_scales.y),
                               std::exp(2.0 * log_scales.z));
    return r * s2 * r.transposed();
}

}  // namespace wgs
