#pragma once

#include <string>

namespace poolcast {

/// A standard (location 0, scale 1) member of one of the supported
/// location-scale families used as inverse link.
class LinkFamily {
public:
    enum class Kind { StandardNormal, StandardLogistic, ExponentialPower };

    /// Largest accepted exponential-power shape; beyond it the gamma
    /// functions in the variance overflow long before the family stops
    /// looking uniform.
    static constexpr double kMaxPower = 64.0;

    static LinkFamily normal() { return LinkFamily(Kind::StandardNormal, 2.0); }
    static LinkFamily logistic() { return LinkFamily(Kind::StandardLogistic, 0.0); }
    static LinkFamily exponential_power(double power);

    /// Parses "normal", "logistic", or "ep" (power required for ep).
    static LinkFamily from_name(const std::string& name, double power = 2.0);

    Kind kind() const noexcept { return kind_; }
    /// Power parameter; meaningful for ExponentialPower only.
    double power() const noexcept { return power_; }
    std::string name() const;

    friend bool operator==(const LinkFamily&, const LinkFamily&) = default;

private:
    LinkFamily(Kind kind, double power) : kind_(kind), power_(power) {}
    Kind kind_;
    double power_;
};

double link_cdf(const LinkFamily& family, double z);
double link_log_cdf(const LinkFamily& family, double z);
double link_pdf(const LinkFamily& family, double z);
double link_log_pdf(const LinkFamily& family, double z);
double link_quantile(const LinkFamily& family, double p);
double link_variance(const LinkFamily& family);

}  // namespace poolcast
