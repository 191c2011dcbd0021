#include "geoquiz/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "geoquiz/error.hpp"

namespace geoquiz {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::domain: return "domain";
        case ErrorKind::validation: return "validation";
        case ErrorKind::auth: return "auth";
        case ErrorKind::conflict: return "conflict";
        case ErrorKind::sequence: return "sequence";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::content: return "content";
        case ErrorKind::state: return "state";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace geoquiz

namespace geoquiz::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct Vec3 {
    double x, y, z;
};

Vec3 to_unit(const GeoPoint& p) {
    const double phi = p.lat() * kDegToRad;
    const double lambda = p.lon() * kDegToRad;
    return {std::cos(phi) * std::cos(lambda), std::cos(phi) * std::sin(lambda), std::sin(phi)};
}

GeoPoint from_unit(const Vec3& v) {
    const double norm = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    const double lat = std::asin(std::clamp(v.z / norm, -1.0, 1.0)) * kRadToDeg;
    const double lon = std::atan2(v.y, v.x) * kRadToDeg;
    return GeoPoint(lat, lon);
}

}  // namespace

double normalize_longitude(double lon) {
    if (lon >= -180.0 && lon < 180.0) return lon;
    double wrapped = std::fmod(lon + 180.0, 360.0);
    if (wrapped < 0.0) wrapped += 360.0;
    wrapped -= 180.0;
    // fmod can land exactly on +180 through rounding
    return wrapped >= 180.0 ? -180.0 : wrapped;
}

GeoPoint::GeoPoint(double lat, double lon) {
    if (!std::isfinite(lat) || !std::isfinite(lon))
        throw Error(ErrorKind::domain, "coordinate is not finite");
    if (lat < -90.0 || lat > 90.0)
        throw Error(ErrorKind::domain, "latitude outside [-90, 90]: " + std::to_string(lat));
    lat_ = lat;
    lon_ = normalize_longitude(lon);
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
    // Evaluate in a canonical argument order so d(a,b) and d(b,a) are bitwise equal.
    const bool swap = a.lat() != b.lat() ? a.lat() > b.lat() : a.lon() > b.lon();
    const GeoPoint& p = swap ? b : a;
    const GeoPoint& q = swap ? a : b;

    const double phi1 = p.lat() * kDegToRad;
    const double phi2 = q.lat() * kDegToRad;
    const double sin_dphi = std::sin((phi2 - phi1) / 2.0);
    const double sin_dlambda = std::sin((q.lon() - p.lon()) * kDegToRad / 2.0);
    double h = sin_dphi * sin_dphi + std::cos(phi1) * std::cos(phi2) * sin_dlambda * sin_dlambda;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusM * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

bool within_radius(const GeoPoint& user, const GeoPoint& center, double radius_m) {
    if (!(radius_m > 0.0))
        throw Error(ErrorKind::domain, "radius must be positive");
    return haversine_distance(user, center) < radius_m;
}

double initial_bearing(const GeoPoint& from, const GeoPoint& to) {
    const double phi1 = from.lat() * kDegToRad;
    const double phi2 = to.lat() * kDegToRad;
    const double dlambda = (to.lon() - from.lon()) * kDegToRad;
    const double y = std::sin(dlambda) * std::cos(phi2);
    const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
    double deg = std::atan2(y, x) * kRadToDeg;
    if (deg < 0.0) deg += 360.0;
    return deg >= 360.0 ? 0.0 : deg;
}

GeoPoint destination(const GeoPoint& origin, double bearing_deg, double distance_m) {
    const double delta = distance_m / kEarthRadiusM;
    const double theta = bearing_deg * kDegToRad;
    const double phi1 = origin.lat() * kDegToRad;
    const double lambda1 = origin.lon() * kDegToRad;
    const double sin_phi2 =
        std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
    const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
    const double lambda2 =
        lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                             std::cos(delta) - std::sin(phi1) * sin_phi2);
    return GeoPoint(phi2 * kRadToDeg, lambda2 * kRadToDeg);
}

GeoPoint interpolate(const GeoPoint& a, const GeoPoint& b, double f) {
    if (f <= 0.0) return a;
    if (f >= 1.0) return b;
    const Vec3 u = to_unit(a);
    const Vec3 v = to_unit(b);
    const double dot = std::clamp(u.x * v.x + u.y * v.y + u.z * v.z, -1.0, 1.0);
    const double omega = std::acos(dot);
    if (omega < 1e-15) return a;
    const double s = std::sin(omega);
    const double wa = std::sin((1.0 - f) * omega) / s;
    const double wb = std::sin(f * omega) / s;
    return from_unit({wa * u.x + wb * v.x, wa * u.y + wb * v.y, wa * u.z + wb * v.z});
}

std::optional<NearestHit> nearest(const GeoPoint& user, std::span<const Located> candidates) {
    std::optional<NearestHit> best;
    for (const auto& c : candidates) {
        const double d = haversine_distance(user, c.position);
        if (!best || d < best->distance_m || (d == best->distance_m && c.id < best->id))
            best = NearestHit{c.id, d};
    }
    return best;
}

}  // namespace geoquiz::geo
