#pragma once

namespace cdyn {

double normal_cdf(double x);

/// Inverse standard normal CDF; +-infinity at 0 and 1.
double normal_quantile(double p);

/// How the two-sided critical value z = Phi^-1(1 - alpha/2) is rendered.
enum class ZRule {
    Tabulated,  // rounded to two decimals, the z-table value (1.96 at alpha = 0.05)
    Exact,
};

double gaussian_z(double alpha, ZRule rule = ZRule::Tabulated);

}  // namespace cdyn
