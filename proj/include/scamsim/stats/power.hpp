#pragma once

namespace scamsim::stats {

/// Power of the one-way ANOVA F test with k groups of n: df1 = k − 1,
/// df2 = k(n − 1), noncentrality λ = f²·k·n.
double anova_power(int k_groups, int n_per_group, double cohens_f, double alpha);

/// Smallest n per group whose power reaches the target (n capped at 10⁶).
int power_n_per_group(int k_groups, double cohens_f, double alpha, double power);

}  // namespace scamsim::stats
