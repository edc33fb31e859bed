#pragma once

#include <string>

#include "aquifer/raster.hpp"

namespace aquifer {

struct PixelGeometry {
    double pixel_area_m2 = 1.24 * 1.24;  // 1.5376 m^2

    void validate() const {
        if (!(pixel_area_m2 > 0)) throw ValidationError("pixel area must be positive");
    }
};

inline constexpr double kFt2PerM2 = 10.7639104167;
inline constexpr double kM2PerFt2 = 0.09290304;

struct ConsumptionRates {
    double w_r_gal_per_person_day = 40.0;
    double w_nr_gal_per_person_day = 21.0;
    double occupancy_ft2_per_person = 750.0;

    void validate() const;
    double residential_rate_gal_per_m2_day() const;
    double nonresidential_rate_gal_per_m2_day() const;
};

struct ConsumptionReport {
    double area_residential_m2 = 0.0;
    double area_nonresidential_m2 = 0.0;
    double water_gal_per_day = 0.0;
    double residential_share_gal = 0.0;
    double nonresidential_share_gal = 0.0;
    ConsumptionRates rates;
    PixelGeometry geometry;
};

// A_R = sum a_P * P{building} * P{res|building};
// A_NR uses the complement P{nonres|building} = 1 - P{res|building}.
// Compensated (Kahan) accumulation over millions of pixels.
std::pair<double, double> expected_areas(const ProbabilityMask& p_building,
                                         const ProbabilityMask& p_res_given_building,
                                         const PixelGeometry& geom);

double per_person_to_per_area_rate(double gal_per_person_day, double occupancy_ft2);

// W = A_R * rate_R + A_NR * rate_NR.
ConsumptionReport water_consumption(double area_residential_m2, double area_nonresidential_m2,
                                    const ConsumptionRates& rates,
                                    const PixelGeometry& geom = {});

struct BenchmarkComparison {
    double w_million_gal_per_km2_day = 0.0;
    double phoenix_million_gal = 0.194;
    double portland_million_gal = 0.091;
    double ratio_phoenix = 0.0;
    double ratio_portland = 0.0;
    bool within_40pct_phoenix = false;
    bool within_40pct_portland = false;
    bool exact_match_phoenix = false;
    bool exact_match_portland = false;
};

// Ratios of per-km^2 consumption against the recorded Phoenix/Portland
// constants; the within flag mirrors the +/-40% band.
BenchmarkComparison benchmark_comparison(const ConsumptionReport& report,
                                         double image_area_km2 = 1.0);

std::string consumption_report_json(const ConsumptionReport& report);
std::string benchmark_comparison_json(const BenchmarkComparison& cmp);

}  // namespace aquifer
