#include "trendlab/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trendlab/errors.hpp"
#include "trendlab/text.hpp"

namespace trendlab::cmaes {

namespace {

constexpr double kConditionLimit = 1e14;

bool better(const Candidate& a, const Candidate& b) {
    bool fa = std::isfinite(a.fitness);
    bool fb = std::isfinite(b.fitness);
    if (fa != fb) return fa;  // finite beats non-finite
    if (!fa) return false;    // both non-finite: keep sample order
    return a.fitness > b.fitness;
}

}  // namespace

double expected_norm_standard_normal(int dim) {
    double n = static_cast<double>(dim);
    return std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
}

void CmaConfig::validate() const {
    if (dim < 1) throw InvalidDimensionError("CMA-ES dimension must be >= 1");
    if (lambda < 2) throw ConfigError("population size must be >= 2");
    if (mu < 1 || mu > lambda) throw ConfigError("parent count must be in [1, lambda]");
    if (weights.size() != mu) throw ConfigError("weights size must equal mu");
    double sum = 0;
    for (int i = 0; i < mu; ++i) {
        if (!(weights[i] > 0)) throw ConfigError("weights must be strictly positive");
        if (i > 0 && weights[i] > weights[i - 1]) {
            throw ConfigError("weights must be non-increasing");
        }
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("weights must sum to 1");
    if (!(sigma0 > 0)) throw ConfigError("sigma0 must be positive");
    if (mean0.size() != dim) throw ConfigError("mean0 size must equal dim");
    if (init_scales.size() != 0 && init_scales.size() != dim) {
        throw ConfigError("init_scales size must equal dim");
    }
    if (c_1 + c_mu > 1.0 + 1e-12) throw ConfigError("c_1 + c_mu must be <= 1");
}

CmaConfig default_config(int dim, const Eigen::VectorXd& mean0, double sigma0,
                         std::uint64_t seed, int lambda_override) {
    if (dim < 1) throw InvalidDimensionError("CMA-ES dimension must be >= 1");
    CmaConfig cfg;
    cfg.dim = dim;
    double n = static_cast<double>(dim);
    cfg.lambda = lambda_override > 0 ? lambda_override
                                     : 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
    cfg.mu = cfg.lambda / 2;

    cfg.weights = Eigen::VectorXd(cfg.mu);
    for (int i = 0; i < cfg.mu; ++i) {
        cfg.weights[i] = std::log(cfg.mu + 0.5) - std::log(i + 1.0);
    }
    cfg.weights /= cfg.weights.sum();
    cfg.mu_eff = 1.0 / cfg.weights.squaredNorm();

    cfg.c_sigma = (cfg.mu_eff + 2.0) / (n + cfg.mu_eff + 5.0);
    cfg.d_sigma =
        1.0 + 2.0 * std::max(0.0, std::sqrt((cfg.mu_eff - 1.0) / (n + 1.0)) - 1.0) + cfg.c_sigma;
    cfg.c_c = (4.0 + cfg.mu_eff / n) / (n + 4.0 + 2.0 * cfg.mu_eff / n);
    cfg.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + cfg.mu_eff);
    cfg.c_mu = std::min(1.0 - cfg.c_1, 2.0 * (cfg.mu_eff - 2.0 + 1.0 / cfg.mu_eff) /
                                           ((n + 2.0) * (n + 2.0) + cfg.mu_eff));

    cfg.mean0 = mean0;
    cfg.sigma0 = sigma0;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

std::mt19937_64 make_generation_rng(std::uint64_t seed, int generation) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(generation), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

CmaState initial_state(const CmaConfig& config) {
    config.validate();
    CmaState s;
    s.mean = config.mean0;
    s.sigma = config.sigma0;
    if (config.init_scales.size() == config.dim) {
        s.cov = config.init_scales.array().square().matrix().asDiagonal();
    } else {
        s.cov = Eigen::MatrixXd::Identity(config.dim, config.dim);
    }
    s.path_sigma = Eigen::VectorXd::Zero(config.dim);
    s.path_cov = Eigen::VectorXd::Zero(config.dim);
    s.best_x = config.mean0;
    refresh_eigensystem(s);
    return s;
}

void refresh_eigensystem(CmaState& state) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(state.cov);
    if (solver.info() != Eigen::Success) {
        throw DecompositionFailure("covariance eigendecomposition failed");
    }
    Eigen::VectorXd evals = solver.eigenvalues();
    double max_eig = evals.maxCoeff();
    if (!(max_eig > 0)) {
        // Fully collapsed covariance: reset to a tiny sphere.
        state.cov = Eigen::MatrixXd::Identity(state.cov.rows(), state.cov.cols()) * 1e-14;
        solver.compute(state.cov);
        evals = solver.eigenvalues();
        max_eig = evals.maxCoeff();
    }
    double floor = max_eig / kConditionLimit;
    if (evals.minCoeff() < floor) {
        evals = evals.cwiseMax(floor);
        state.cov = solver.eigenvectors() * evals.asDiagonal() * solver.eigenvectors().transpose();
        state.cov = 0.5 * (state.cov + state.cov.transpose()).eval();
    }
    state.eigen_basis = solver.eigenvectors();
    state.eigen_scale = evals.cwiseSqrt();
}

std::vector<Candidate> sample_population(const CmaState& state, const CmaConfig& config,
                                         std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Candidate> out(config.lambda);
    for (int i = 0; i < config.lambda; ++i) {
        Eigen::VectorXd u(config.dim);
        for (int j = 0; j < config.dim; ++j) u[j] = normal(rng);
        out[i].x = state.mean + state.sigma * (state.eigen_basis *
                                               (state.eigen_scale.asDiagonal() * u));
    }
    return out;
}

void rank_candidates(std::vector<Candidate>& candidates) {
    std::vector<int> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return better(candidates[a], candidates[b]);
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
        candidates[order[r]].rank = static_cast<int>(r);
    }
}

Eigen::VectorXd rank_and_recombine(const CmaConfig& config, std::vector<Candidate>& candidates) {
    rank_candidates(candidates);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(config.dim);
    std::vector<const Candidate*> by_rank(candidates.size());
    for (const auto& c : candidates) by_rank[c.rank] = &c;
    for (int i = 0; i < config.mu; ++i) {
        mean += config.weights[i] * by_rank[i]->x;
    }
    return mean;
}

void update_paths_and_covariance(CmaState& state, const CmaConfig& config,
                                 const Eigen::VectorXd& old_mean,
                                 std::span<const Candidate> selected) {
    const double n = static_cast<double>(config.dim);
    Eigen::VectorXd shift = (state.mean - old_mean) / state.sigma;

    // C^(-1/2) * shift from the cached eigensystem.
    Eigen::VectorXd whitened =
        state.eigen_basis *
        (state.eigen_scale.cwiseInverse().asDiagonal() * (state.eigen_basis.transpose() * shift));

    state.path_sigma = (1.0 - config.c_sigma) * state.path_sigma +
                       std::sqrt(config.c_sigma * (2.0 - config.c_sigma) * config.mu_eff) *
                           whitened;

    // Heaviside gate: stall the rank-one path while the sigma path is long.
    double gens = static_cast<double>(state.generation + 1);
    double normalizer = std::sqrt(1.0 - std::pow(1.0 - config.c_sigma, 2.0 * gens));
    double threshold = (1.4 + 2.0 / (n + 1.0)) * expected_norm_standard_normal(config.dim);
    double h_sigma = (state.path_sigma.norm() / normalizer < threshold) ? 1.0 : 0.0;

    state.path_cov = (1.0 - config.c_c) * state.path_cov +
                     h_sigma * std::sqrt(config.c_c * (2.0 - config.c_c) * config.mu_eff) * shift;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(config.dim, config.dim);
    for (int i = 0; i < config.mu; ++i) {
        Eigen::VectorXd y = (selected[i].x - old_mean) / state.sigma;
        rank_mu.noalias() += config.weights[i] * (y * y.transpose());
    }

    state.cov = (1.0 - config.c_1 - config.c_mu) * state.cov +
                config.c_1 * (state.path_cov * state.path_cov.transpose()) + config.c_mu * rank_mu;
    state.cov = 0.5 * (state.cov + state.cov.transpose()).eval();
}

void update_step_size(CmaState& state, const CmaConfig& config) {
    double expected = expected_norm_standard_normal(config.dim);
    state.sigma *= std::exp((config.c_sigma / config.d_sigma) *
                            (state.path_sigma.norm() / expected - 1.0));
}

GenerationStats run_generation(CmaState& state, const CmaConfig& config,
                               const Objective& objective) {
    std::mt19937_64 rng = make_generation_rng(config.seed, state.generation);
    std::vector<Candidate> candidates = sample_population(state, config, rng);
    for (auto& c : candidates) {
        c.fitness = objective(c.x);
    }
    state.eval_count += config.lambda;

    Eigen::VectorXd old_mean = state.mean;
    state.mean = rank_and_recombine(config, candidates);

    std::vector<Candidate> by_rank(candidates.size());
    for (auto& c : candidates) by_rank[c.rank] = c;

    update_paths_and_covariance(state, config, old_mean,
                                std::span<const Candidate>(by_rank.data(), config.mu));
    update_step_size(state, config);
    refresh_eigensystem(state);
    state.generation += 1;

    // Best-so-far only considers finite fitness; by_rank[0] is the
    // generation best, so nothing below it can improve.
    const Candidate& generation_best = by_rank.front();
    if (std::isfinite(generation_best.fitness) && generation_best.fitness > state.best_fitness) {
        state.best_fitness = generation_best.fitness;
        state.best_x = generation_best.x;
    }

    GenerationStats stats;
    stats.best = by_rank.front().fitness;
    stats.median = by_rank[by_rank.size() / 2].fitness;
    stats.worst = by_rank.back().fitness;
    stats.all_finite = std::isfinite(stats.best) && std::isfinite(stats.worst);
    return stats;
}

CmaResult optimize(const Objective& objective, const CmaConfig& config) {
    config.validate();
    CmaState state = initial_state(config);

    CmaResult result;
    double last_best = -std::numeric_limits<double>::infinity();
    int stagnant = 0;

    while (true) {
        if (state.eval_count + config.lambda > config.max_evals) {
            result.termination = "max_evals";
            break;
        }
        GenerationStats stats = run_generation(state, config, objective);
        result.history.push_back({state.generation, state.eval_count, stats.best, stats.median,
                                  state.sigma});

        if (config.target_tol > 0 && stats.all_finite &&
            stats.best - stats.worst < config.target_tol) {
            result.termination = "target_tol";
            break;
        }
        if (config.stagnation_generations > 0) {
            if (state.best_fitness > last_best + config.stagnation_improvement) {
                stagnant = 0;
                last_best = state.best_fitness;
            } else {
                ++stagnant;
                if (stagnant >= config.stagnation_generations) {
                    result.termination = "stagnation";
                    break;
                }
            }
        }
    }

    result.best_x = state.best_x;
    result.best_fitness = state.best_fitness;
    return result;
}

Objective penalized_objective(Objective raw, double l1_weight, std::vector<int> l1_mask,
                              Eigen::VectorXd lower, Eigen::VectorXd upper) {
    return [raw = std::move(raw), l1_weight, mask = std::move(l1_mask), lower = std::move(lower),
            upper = std::move(upper)](const Eigen::VectorXd& x) -> double {
        Eigen::VectorXd clamped = x;
        if (lower.size() == x.size()) clamped = clamped.cwiseMax(lower);
        if (upper.size() == x.size()) clamped = clamped.cwiseMin(upper);
        double value = raw(clamped);
        for (int i : mask) value -= l1_weight * std::abs(x[i]);
        value -= (x - clamped).squaredNorm();
        return value;
    };
}

std::string history_csv_header() { return "generation,evals,best,median,sigma"; }

std::string history_csv_row(const CmaHistoryRow& row) {
    return std::to_string(row.generation) + "," + std::to_string(row.evals) + "," +
           format_number(row.best) + "," + format_number(row.median) + "," +
           format_number(row.sigma);
}

}  // namespace trendlab::cmaes
