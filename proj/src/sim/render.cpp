#include "rgbdnav/sim/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rgbdnav/error.hpp"

namespace rgbdnav::sim {

void validate(const CameraModel& cam) {
    if (cam.image_w == 0 || cam.image_h == 0) throw InvalidInput("camera: zero image size");
    if (!(cam.horizontal_fov > 0.0 && cam.horizontal_fov < std::numbers::pi)) {
        throw InvalidInput("camera: fov must lie in (0, pi)");
    }
    if (!(cam.max_depth > 0.0) || !std::isfinite(cam.max_depth)) throw InvalidInput("camera: max depth must be positive");
    if (!(cam.wall_height > 0.0)) throw InvalidInput("camera: wall height must be positive");
}

RayHit raycast(const WorldMap& map, const Pose& origin, double offset, double max_depth) {
    const double angle = origin.theta + offset;
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    RayHit best;
    best.distance = max_depth;
    double nearest = INFINITY;
    for (std::size_t i = 0; i < map.segments.size(); ++i) {
        const auto& l = map.segments[i].line;
        const double ex = l.x2 - l.x1;
        const double ey = l.y2 - l.y1;
        const double denom = dx * ey - dy * ex;
        if (std::abs(denom) < 1e-15) continue;  // parallel
        const double wx = l.x1 - origin.x;
        const double wy = l.y1 - origin.y;
        const double t = (wx * ey - wy * ex) / denom;
        const double s = (wx * dy - wy * dx) / denom;
        if (t < 0.0 || s < 0.0 || s > 1.0) continue;
        if (t < nearest - 1e-12) {
            nearest = t;
            best.segment = i;
        }
    }
    if (nearest < max_depth) {
        best.hit = true;
        best.distance = nearest;
        best.color = map.segments[best.segment].color;
    }
    return best;
}

double column_offset(const CameraModel& cam, std::size_t c) {
    return cam.horizontal_fov * (0.5 - (static_cast<double>(c) + 0.5) / static_cast<double>(cam.image_w));
}

RgbdFrame render_rgbd(const WorldMap& map, const Pose& pose, const CameraModel& cam, double t) {
    validate(cam);
    const std::size_t h = cam.image_h;
    const std::size_t w = cam.image_w;
    RgbdFrame frame{nn::Tensor<float>({3, h, w}), nn::Tensor<float>({1, h, w}), pose, t};
    float* red = frame.color.ptr();
    float* green = red + h * w;
    float* blue = green + h * w;
    float* depth = frame.depth.ptr();
    const double center = static_cast<double>(h) / 2.0;
    const double pixels_per_rad = static_cast<double>(h) / cam.horizontal_fov;
    for (std::size_t c = 0; c < w; ++c) {
        const auto ray = raycast(map, pose, column_offset(cam, c), cam.max_depth);
        const double half_band = ray.hit ? pixels_per_rad * (cam.wall_height / 2.0) / ray.distance : -1.0;
        const float wall_depth = static_cast<float>(std::clamp(ray.distance / cam.max_depth, 0.0, 1.0));
        for (std::size_t r = 0; r < h; ++r) {
            const double y = static_cast<double>(r) + 0.5;
            Rgb px;
            float d = 1.0f;
            if (ray.hit && std::abs(y - center) <= half_band) {
                px = ray.color;
                d = wall_depth;
            } else {
                px = y < center ? kSkyColor : kFloorColor;
            }
            const std::size_t i = r * w + c;
            red[i] = static_cast<float>(px.r) / 255.0f;
            green[i] = static_cast<float>(px.g) / 255.0f;
            blue[i] = static_cast<float>(px.b) / 255.0f;
            depth[i] = d;
        }
    }
    return frame;
}

}  // namespace rgbdnav::sim
