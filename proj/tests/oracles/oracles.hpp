#pragma once

// Straightforward reference implementations used to cross-check the library.
// Nothing here calls into ceilkit; inputs are plain nested vectors.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& m);

double cos(const std::vector<double>& a, const std::vector<double>& b);

// -log(exp(s_ij/tau) / sum_{k != i} exp(s_ik/tau)), plain exponentials.
double contrastive_pair(const Rows& h, std::size_t i, std::size_t j, double tau);
double contrastive(const Rows& h, double tau);

Rows soft_assign(const Rows& h, const Rows& mu, double alpha);
Rows target(const Rows& q);
double kl(const Rows& p, const Rows& q);

// Steps (1)-(5) of the category loss; pair_count selects K(K-1)/2.
double category(const Rows& h, const Rows& q, double theta, bool pair_count);

// Filter rule on one cluster: ids[i] owns reps[i].
std::vector<int> filter(const std::vector<int>& ids, const Rows& reps, double beta);

// Greedy merge of cluster means; clusters are document-id lists into reps.
std::vector<std::vector<int>> aggregate(std::vector<std::vector<int>> clusters, const Rows& reps, double delta);

// Minimum total cost over all permutations (square matrix).
double brute_assignment_cost(const Rows& cost);

// Best matching accuracy by trying every injective map of predicted clusters
// onto gold labels (small k only).
double brute_accuracy(const std::vector<int>& pred, const std::vector<int>& gold);

double nmi(const std::vector<int>& pred, const std::vector<int>& gold);
// NMI straight from a contingency table of counts.
double nmi_from_table(const std::vector<std::vector<long long>>& table);

// Central differences of f at x (flattened), step h.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h = 1e-5);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                          double floor = 1e-6);

}  // namespace oracle
