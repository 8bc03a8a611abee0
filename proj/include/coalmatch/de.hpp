#pragma once

#include <utility>

#include <Eigen/Dense>

#include "coalmatch/errors.hpp"
#include "coalmatch/rng.hpp"

namespace coalmatch {

struct DeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  long evaluations = 0;
};

// DE/rand/1/bin maximizer on a box. Trials replace their parent on >=, so the
// population keeps drifting across flat plateaus instead of freezing, which
// is what a step objective needs. Fully deterministic given the rng stream.
template <typename Objective>
DeResult differential_evolution(Objective&& objective, const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, int population, int generations,
                                double weight, double crossover, Rng rng) {
  const int dim = static_cast<int>(lo.size());
  if (dim == 0) throw config_error("differential evolution needs at least one parameter");
  if (population < 4) throw config_error("differential evolution needs population >= 4");
  if (!(weight > 0.0 && weight < 2.0)) throw config_error("mutation weight outside (0, 2)");
  if (!(crossover > 0.0 && crossover <= 1.0)) throw config_error("crossover rate outside (0, 1]");
  for (int d = 0; d < dim; ++d)
    if (!(lo(d) < hi(d)) || !std::isfinite(lo(d)) || !std::isfinite(hi(d)))
      throw config_error("parameter bounds must be finite with lo < hi");

  DeResult result;
  Eigen::MatrixXd pop(dim, population);
  Eigen::VectorXd fitness(population);
  for (int p = 0; p < population; ++p) {
    for (int d = 0; d < dim; ++d) pop(d, p) = rng.uniform(lo(d), hi(d));
    fitness(p) = objective(Eigen::VectorXd(pop.col(p)));
    ++result.evaluations;
  }

  Eigen::VectorXd trial(dim);
  for (int gen = 0; gen < generations; ++gen) {
    for (int p = 0; p < population; ++p) {
      int r1, r2, r3;
      do { r1 = static_cast<int>(rng.below(population)); } while (r1 == p);
      do { r2 = static_cast<int>(rng.below(population)); } while (r2 == p || r2 == r1);
      do { r3 = static_cast<int>(rng.below(population)); } while (r3 == p || r3 == r1 || r3 == r2);
      int jrand = static_cast<int>(rng.below(dim));
      for (int d = 0; d < dim; ++d) {
        if (d == jrand || rng.uniform() < crossover) {
          double v = pop(d, r1) + weight * (pop(d, r2) - pop(d, r3));
          trial(d) = std::clamp(v, lo(d), hi(d));
        } else {
          trial(d) = pop(d, p);
        }
      }
      double value = objective(trial);
      ++result.evaluations;
      if (value >= fitness(p)) {
        pop.col(p) = trial;
        fitness(p) = value;
      }
    }
  }

  int best = 0;
  fitness.maxCoeff(&best);
  result.x = pop.col(best);
  result.value = fitness(best);
  return result;
}

}  // namespace coalmatch
