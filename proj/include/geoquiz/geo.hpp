#pragma once

#include <optional>
#include <span>
#include <string>

namespace geoquiz::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// WGS84 coordinate in degrees. Latitude is validated; longitude is wrapped
/// into [-180, +180) so that 180 and -180 denote the same meridian.
class GeoPoint {
public:
    GeoPoint() = default;
    /// Throws Error(domain) for non-finite input or |lat| > 90.
    GeoPoint(double lat, double lon);

    double lat() const noexcept { return lat_; }
    double lon() const noexcept { return lon_; }

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

private:
    double lat_ = 0.0;
    double lon_ = 0.0;
};

double normalize_longitude(double lon);

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
/// Exactly symmetric in its arguments.
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

/// Strict membership: distance < radius_m. Throws Error(domain) if radius_m <= 0.
bool within_radius(const GeoPoint& user, const GeoPoint& center, double radius_m);

/// Initial bearing from `from` to `to`, degrees clockwise from north in [0, 360).
double initial_bearing(const GeoPoint& from, const GeoPoint& to);

/// Point reached by travelling `distance_m` from `origin` along `bearing_deg`.
GeoPoint destination(const GeoPoint& origin, double bearing_deg, double distance_m);

/// Spherical linear interpolation along the great circle from a to b, f in [0, 1].
GeoPoint interpolate(const GeoPoint& a, const GeoPoint& b, double f);

struct Located {
    std::string id;
    GeoPoint position;
};

struct NearestHit {
    std::string id;
    double distance_m = 0.0;

    friend bool operator==(const NearestHit&, const NearestHit&) = default;
};

/// Closest candidate; ties go to the lexicographically smallest id.
std::optional<NearestHit> nearest(const GeoPoint& user, std::span<const Located> candidates);

}  // namespace geoquiz::geo
