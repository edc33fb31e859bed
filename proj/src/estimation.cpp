#include "aquifer/estimation.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace aquifer {

void ConsumptionRates::validate() const {
    if (!(w_r_gal_per_person_day > 0) || !(w_nr_gal_per_person_day > 0) ||
        !(occupancy_ft2_per_person > 0))
        throw ValidationError("consumption rates and occupancy must be positive");
}

double ConsumptionRates::residential_rate_gal_per_m2_day() const {
    return per_person_to_per_area_rate(w_r_gal_per_person_day, occupancy_ft2_per_person);
}

double ConsumptionRates::nonresidential_rate_gal_per_m2_day() const {
    return per_person_to_per_area_rate(w_nr_gal_per_person_day, occupancy_ft2_per_person);
}

double per_person_to_per_area_rate(double gal_per_person_day, double occupancy_ft2) {
    if (!(gal_per_person_day > 0) || !(occupancy_ft2 > 0))
        throw ValidationError("per-person rate and occupancy must be positive");
    return gal_per_person_day / (occupancy_ft2 * kM2PerFt2);
}

namespace {

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

std::pair<double, double> expected_areas(const ProbabilityMask& p_building,
                                         const ProbabilityMask& p_res_given_building,
                                         const PixelGeometry& geom) {
    geom.validate();
    p_building.validate();
    p_res_given_building.validate();
    if (p_building.width != p_res_given_building.width ||
        p_building.height != p_res_given_building.height)
        throw ShapeError("probability mask shapes differ");

    KahanSum res, nonres;
    for (std::size_t i = 0; i < p_building.probs.size(); ++i) {
        const double pb = p_building.probs[i];
        const double pr = p_res_given_building.probs[i];
        res.add(pb * pr);
        nonres.add(pb * (1.0 - pr));
    }
    return {geom.pixel_area_m2 * res.sum, geom.pixel_area_m2 * nonres.sum};
}

ConsumptionReport water_consumption(double area_residential_m2, double area_nonresidential_m2,
                                    const ConsumptionRates& rates, const PixelGeometry& geom) {
    if (area_residential_m2 < 0 || area_nonresidential_m2 < 0)
        throw ValidationError("areas must be non-negative");
    rates.validate();
    geom.validate();

    ConsumptionReport r;
    r.area_residential_m2 = area_residential_m2;
    r.area_nonresidential_m2 = area_nonresidential_m2;
    r.rates = rates;
    r.geometry = geom;
    r.residential_share_gal = area_residential_m2 * rates.residential_rate_gal_per_m2_day();
    r.nonresidential_share_gal = area_nonresidential_m2 * rates.nonresidential_rate_gal_per_m2_day();
    r.water_gal_per_day = r.residential_share_gal + r.nonresidential_share_gal;
    return r;
}

BenchmarkComparison benchmark_comparison(const ConsumptionReport& report, double image_area_km2) {
    if (!(image_area_km2 > 0)) throw ValidationError("image area must be positive");
    BenchmarkComparison cmp;
    cmp.w_million_gal_per_km2_day = report.water_gal_per_day / image_area_km2 / 1e6;
    cmp.ratio_phoenix = cmp.w_million_gal_per_km2_day / cmp.phoenix_million_gal;
    cmp.ratio_portland = cmp.w_million_gal_per_km2_day / cmp.portland_million_gal;
    cmp.within_40pct_phoenix = std::abs(cmp.ratio_phoenix - 1.0) <= 0.40;
    cmp.within_40pct_portland = std::abs(cmp.ratio_portland - 1.0) <= 0.40;
    cmp.exact_match_phoenix = std::abs(cmp.ratio_phoenix - 1.0) <= 1e-9;
    cmp.exact_match_portland = std::abs(cmp.ratio_portland - 1.0) <= 1e-9;
    return cmp;
}

std::string consumption_report_json(const ConsumptionReport& report) {
    nlohmann::ordered_json j;
    j["area_residential_m2"] = report.area_residential_m2;
    j["area_nonresidential_m2"] = report.area_nonresidential_m2;
    j["water_gal_per_day"] = report.water_gal_per_day;
    j["residential_share_gal"] = report.residential_share_gal;
    j["nonresidential_share_gal"] = report.nonresidential_share_gal;
    j["rates"]["w_r_gal_per_person_day"] = report.rates.w_r_gal_per_person_day;
    j["rates"]["w_nr_gal_per_person_day"] = report.rates.w_nr_gal_per_person_day;
    j["rates"]["occupancy_ft2_per_person"] = report.rates.occupancy_ft2_per_person;
    j["rates"]["ft2_per_m2"] = kFt2PerM2;
    j["rates"]["residential_rate_gal_per_m2_day"] = report.rates.residential_rate_gal_per_m2_day();
    j["rates"]["nonresidential_rate_gal_per_m2_day"] =
        report.rates.nonresidential_rate_gal_per_m2_day();
    j["geometry"]["pixel_area_m2"] = report.geometry.pixel_area_m2;
    return j.dump(2) + "\n";
}

std::string benchmark_comparison_json(const BenchmarkComparison& cmp) {
    nlohmann::ordered_json j;
    j["w_million_gal_per_km2_day"] = cmp.w_million_gal_per_km2_day;
    j["phoenix_million_gal"] = cmp.phoenix_million_gal;
    j["portland_million_gal"] = cmp.portland_million_gal;
    j["ratio_phoenix"] = cmp.ratio_phoenix;
    j["ratio_portland"] = cmp.ratio_portland;
    j["within_40pct_phoenix"] = cmp.within_40pct_phoenix;
    j["within_40pct_portland"] = cmp.within_40pct_portland;
    j["exact_match_phoenix"] = cmp.exact_match_phoenix;
    j["exact_match_portland"] = cmp.exact_match_portland;
    return j.dump(2) + "\n";
}

}  // namespace aquifer
