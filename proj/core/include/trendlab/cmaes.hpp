#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace trendlab::cmaes {

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Search configuration. default_config() fills the standard values:
// lambda = 4 + floor(3*ln n), mu = lambda/2, log-decreasing weights and the
// canonical learning-rate formulas
//   mu_eff  = 1 / sum(w_i^2)
//   c_sigma = (mu_eff + 2) / (n + mu_eff + 5)
//   d_sigma = 1 + 2*max(0, sqrt((mu_eff - 1)/(n + 1)) - 1) + c_sigma
//   c_c     = (4 + mu_eff/n) / (n + 4 + 2*mu_eff/n)
//   c_1     = 2 / ((n + 1.3)^2 + mu_eff)
//   c_mu    = min(1 - c_1, 2*(mu_eff - 2 + 1/mu_eff) / ((n + 2)^2 + mu_eff))
struct CmaConfig {
    int dim = 0;
    int lambda = 0;
    int mu = 0;
    Eigen::VectorXd weights;  // mu entries, positive, non-increasing, sum 1

    Eigen::VectorXd mean0;
    double sigma0 = 0.3;
    // Optional per-coordinate scaling of the initial covariance:
    // C0 = diag(init_scales^2). Empty means the identity.
    Eigen::VectorXd init_scales;

    double c_sigma = 0, d_sigma = 0, c_c = 0, c_1 = 0, c_mu = 0;
    double mu_eff = 0;

    std::int64_t max_evals = 20000;
    // Stop when the fitness spread within one generation drops below this;
    // 0 disables the rule.
    double target_tol = 1e-12;
    // Stop after this many generations without best-so-far improvement
    // above stagnation_improvement; <= 0 disables the rule.
    int stagnation_generations = 50;
    double stagnation_improvement = 1e-10;

    std::uint64_t seed = 0;

    // Carried for the penalized-objective wrapper; the core loop never
    // reads them.
    double l1_weight = 0.0;
    Eigen::VectorXd lower;  // empty = unbounded
    Eigen::VectorXd upper;

    void validate() const;  // throws InvalidDimensionError / ConfigError
};

struct Candidate {
    Eigen::VectorXd x;
    double fitness = std::numeric_limits<double>::quiet_NaN();
    int rank = -1;
};

struct CmaState {
    Eigen::VectorXd mean;
    double sigma = 0;
    Eigen::MatrixXd cov;         // C, symmetric positive definite
    Eigen::VectorXd path_sigma;  // step-size evolution path
    Eigen::VectorXd path_cov;    // covariance evolution path
    int generation = 0;
    std::int64_t eval_count = 0;

    Eigen::VectorXd best_x;
    double best_fitness = -std::numeric_limits<double>::infinity();

    // Cached eigendecomposition of cov: cov = basis * diag(scale^2) * basis^T.
    Eigen::MatrixXd eigen_basis;
    Eigen::VectorXd eigen_scale;
};

struct CmaHistoryRow {
    int generation = 0;
    std::int64_t evals = 0;
    double best = 0;    // best fitness in the generation
    double median = 0;  // median fitness in the generation
    double sigma = 0;
};

struct CmaResult {
    Eigen::VectorXd best_x;
    double best_fitness = -std::numeric_limits<double>::infinity();
    std::vector<CmaHistoryRow> history;
    std::string termination;  // max_evals | target_tol | stagnation
};

// E||N(0,I_n)|| ~= sqrt(n) * (1 - 1/(4n) + 1/(21 n^2)).
double expected_norm_standard_normal(int dim);

// lambda_override = 0 keeps the 4 + floor(3 ln n) formula.
CmaConfig default_config(int dim, const Eigen::VectorXd& mean0, double sigma0,
                         std::uint64_t seed, int lambda_override = 0);

// Generation RNG; sampling is a pure function of (seed, generation).
std::mt19937_64 make_generation_rng(std::uint64_t seed, int generation);

CmaState initial_state(const CmaConfig& config);

// Recomputes the cached eigendecomposition; floors eigenvalues at
// max_eig * 1e-14 when the condition number exceeds 1e14 (and rebuilds cov
// accordingly). Throws DecompositionFailure when the solver fails.
void refresh_eigensystem(CmaState& state);

// lambda draws x_i = mean + sigma * B * D * u_i with u_i standard normal.
std::vector<Candidate> sample_population(const CmaState& state, const CmaConfig& config,
                                         std::mt19937_64& rng);

// Assigns ranks 0..lambda-1: higher fitness first (maximization), non-finite
// fitness strictly worst, ties broken by sample index.
void rank_candidates(std::vector<Candidate>& candidates);

// New mean = sum of weights_i * x_(i) over the mu best. Candidates are
// ranked in place.
Eigen::VectorXd rank_and_recombine(const CmaConfig& config, std::vector<Candidate>& candidates);

// Evolution-path and covariance update. state.mean must already hold the
// new mean; selected holds the mu best candidates in rank order.
void update_paths_and_covariance(CmaState& state, const CmaConfig& config,
                                 const Eigen::VectorXd& old_mean,
                                 std::span<const Candidate> selected);

// sigma *= exp((c_sigma/d_sigma) * (||p_sigma|| / E||N|| - 1)).
void update_step_size(CmaState& state, const CmaConfig& config);

struct GenerationStats {
    double best = 0;
    double median = 0;
    double worst = 0;
    bool all_finite = false;
};

// One full generation: sample, evaluate, rank, recombine, adapt. Keeps the
// best-so-far in state and leaves the eigensystem refreshed.
GenerationStats run_generation(CmaState& state, const CmaConfig& config,
                               const Objective& objective);

CmaResult optimize(const Objective& objective, const CmaConfig& config);

// Wraps a raw objective with box clamping, a quadratic out-of-bounds
// penalty, and an L1 penalty on the masked coordinates:
//   x -> raw(clamp(x)) - l1_weight * sum_{i in mask} |x_i| - ||x - clamp(x)||^2
Objective penalized_objective(Objective raw, double l1_weight, std::vector<int> l1_mask,
                              Eigen::VectorXd lower, Eigen::VectorXd upper);

std::string history_csv_header();
std::string history_csv_row(const CmaHistoryRow& row);

}  // namespace trendlab::cmaes
