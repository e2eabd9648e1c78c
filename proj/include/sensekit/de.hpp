// Copyright 2026 The sensekit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Differential evolution (DE/rand/1/bin) over a box.
//
// Each generation builds one trial per member from the current population:
//   mutant = x[r1] + F * (x[r2] - x[r3]),  r1, r2, r3 distinct and != i,
// clipped to the box, followed by binomial crossover with one coordinate
// always taken from the mutant. All trials are evaluated before selection,
// and selection walks members in index order, so the result depends only on
// the seed. F is redrawn uniformly from the mutation range every generation.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sensekit/error.hpp"
#include "sensekit/types.hpp"

namespace sensekit {

template <typename Scalar = double>
struct DEConfig {
  VectorX<Scalar> lower;
  VectorX<Scalar> upper;
  int max_iterations = 10000;
  Scalar rel_tol = Scalar(1e-7);
  int popsize_multiplier = 15;
  Scalar mutation_min = Scalar(0.5);
  Scalar mutation_max = Scalar(1.0);
  Scalar crossover = Scalar(0.7);
  std::uint64_t seed = 0;
  /// Copied verbatim over the first members of the initial population.
  std::vector<VectorX<Scalar>> seed_points;

  /// [0, 1]^dim with every other field at its default.
  static DEConfig unit_box(Index dim) {
    DEConfig c;
    c.lower = VectorX<Scalar>::Zero(dim);
    c.upper = VectorX<Scalar>::Ones(dim);
    return c;
  }

  static DEConfig box(Index dim, Scalar lo, Scalar hi) {
    DEConfig c;
    c.lower = VectorX<Scalar>::Constant(dim, lo);
    c.upper = VectorX<Scalar>::Constant(dim, hi);
    return c;
  }

  Index dimension() const { return lower.size(); }
  Index population_size() const { return popsize_multiplier * dimension(); }

  void validate() const {
    if (dimension() < 1) throw UsageError("DE: dimension must be >= 1");
    if (upper.size() != lower.size()) throw UsageError("DE: bounds have different lengths");
    for (Index k = 0; k < dimension(); ++k) {
      if (!(lower(k) < upper(k))) {
        throw UsageError("DE: bound " + std::to_string(k) + " has lo >= hi");
      }
    }
    if (max_iterations < 1) throw UsageError("DE: max iterations must be >= 1");
    if (!(rel_tol >= 0)) throw UsageError("DE: relative tolerance must be >= 0");
    if (population_size() < 4) throw UsageError("DE: population must have >= 4 members");
    if (!(mutation_min > 0 && mutation_min <= mutation_max && mutation_max < 2)) {
      throw UsageError("DE: mutation range must lie in (0, 2)");
    }
    if (!(crossover >= 0 && crossover <= 1)) throw UsageError("DE: crossover must be in [0, 1]");
    if (static_cast<Index>(seed_points.size()) > population_size()) {
      throw UsageError("DE: more seed points than population members");
    }
    for (const auto& p : seed_points) {
      if (p.size() != dimension()) throw UsageError("DE: seed point has wrong dimension");
      if ((p.array() < lower.array()).any() || (p.array() > upper.array()).any()) {
        throw UsageError("DE: seed point lies outside the bounds");
      }
    }
  }
};

template <typename Scalar = double>
struct DEResult {
  VectorX<Scalar> best_x;
  Scalar best_f{};
  int iterations_used = 0;
  bool converged = false;
  /// Best objective value of generation g at index g (generation 0 is the
  /// initial population).
  std::vector<Scalar> trace;
};

/// stddev(values) <= tol * |mean(values)|, population standard deviation.
template <typename Scalar>
bool check_convergence(const VectorX<Scalar>& values, Scalar tol) {
  if (values.size() == 0) throw UsageError("check_convergence: empty population");
  const Scalar mean = values.mean();
  const Scalar var = (values.array() - mean).square().mean();
  return std::sqrt(var) <= tol * std::abs(mean);
}

template <typename Scalar>
bool check_convergence(const std::vector<Scalar>& values, Scalar tol) {
  return check_convergence<Scalar>(
      Eigen::Map<const VectorX<Scalar>>(values.data(), static_cast<Index>(values.size())), tol);
}

namespace detail {

template <typename Scalar, typename Objective>
Scalar evaluate_checked(Objective& objective, const VectorX<Scalar>& x) {
  const Scalar f = objective(x);
  if (!std::isfinite(static_cast<double>(f))) {
    std::ostringstream os;
    os << "DE: objective returned " << f << " at [";
    for (Index k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x(k);
    os << "]";
    throw NumericError(os.str());
  }
  return f;
}

}  // namespace detail

/// Minimizes objective over the configured box.
template <typename Scalar, typename Objective>
DEResult<Scalar> de_minimize(Objective&& objective, const DEConfig<Scalar>& config) {
  config.validate();
  const Index dim = config.dimension();
  const Index np = config.population_size();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Index> pick_member(0, np - 1);
  std::uniform_int_distribution<Index> pick_coord(0, dim - 1);

  const VectorX<Scalar> span = config.upper - config.lower;
  MatrixX<Scalar> pop(dim, np);
  for (Index i = 0; i < np; ++i) {
    for (Index k = 0; k < dim; ++k) {
      pop(k, i) = config.lower(k) + span(k) * static_cast<Scalar>(unit(rng));
    }
  }
  for (std::size_t s = 0; s < config.seed_points.size(); ++s) {
    pop.col(static_cast<Index>(s)) = config.seed_points[s];
  }

  VectorX<Scalar> fitness(np);
  for (Index i = 0; i < np; ++i) {
    fitness(i) = detail::evaluate_checked<Scalar>(objective, VectorX<Scalar>(pop.col(i)));
  }

  DEResult<Scalar> result;
  Index best = 0;
  fitness.minCoeff(&best);
  result.trace.push_back(fitness(best));

  MatrixX<Scalar> trials(dim, np);
  VectorX<Scalar> trial_fitness(np);
  for (int gen = 1; gen <= config.max_iterations; ++gen) {
    const Scalar f_scale = config.mutation_min + (config.mutation_max - config.mutation_min) *
                                                     static_cast<Scalar>(unit(rng));
    for (Index i = 0; i < np; ++i) {
      Index r1, r2, r3;
      do r1 = pick_member(rng); while (r1 == i);
      do r2 = pick_member(rng); while (r2 == i || r2 == r1);
      do r3 = pick_member(rng); while (r3 == i || r3 == r1 || r3 == r2);
      VectorX<Scalar> mutant = pop.col(r1) + f_scale * (pop.col(r2) - pop.col(r3));
      mutant = mutant.cwiseMax(config.lower).cwiseMin(config.upper);

      const Index forced = pick_coord(rng);
      for (Index k = 0; k < dim; ++k) {
        const bool take = k == forced || unit(rng) < static_cast<double>(config.crossover);
        trials(k, i) = take ? mutant(k) : pop(k, i);
      }
    }
    for (Index i = 0; i < np; ++i) {
      trial_fitness(i) =
          detail::evaluate_checked<Scalar>(objective, VectorX<Scalar>(trials.col(i)));
    }
    for (Index i = 0; i < np; ++i) {
      if (trial_fitness(i) <= fitness(i)) {
        pop.col(i) = trials.col(i);
        fitness(i) = trial_fitness(i);
      }
    }
    fitness.minCoeff(&best);
    result.trace.push_back(fitness(best));
    result.iterations_used = gen;
    if (check_convergence(fitness, config.rel_tol)) {
      result.converged = true;
      break;
    }
  }
  result.best_x = pop.col(best);
  result.best_f = fitness(best);
  return result;
}

template <typename Scalar>
nlohmann::json to_json(const DEConfig<Scalar>& c) {
  nlohmann::json bounds = nlohmann::json::array();
  for (Index k = 0; k < c.dimension(); ++k) bounds.push_back({c.lower(k), c.upper(k)});
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& p : c.seed_points) seeds.push_back(std::vector<Scalar>(p.data(), p.data() + p.size()));
  return {{"bounds", bounds},
          {"max_iterations", c.max_iterations},
          {"rel_tol", c.rel_tol},
          {"popsize_multiplier", c.popsize_multiplier},
          {"mutation", {c.mutation_min, c.mutation_max}},
          {"crossover", c.crossover},
          {"seed", c.seed},
          {"seed_points", seeds}};
}

template <typename Scalar = double>
DEConfig<Scalar> de_config_from_json(const nlohmann::json& j) {
  DEConfig<Scalar> c;
  try {
    const auto& bounds = j.at("bounds");
    c.lower.resize(static_cast<Index>(bounds.size()));
    c.upper.resize(static_cast<Index>(bounds.size()));
    for (std::size_t k = 0; k < bounds.size(); ++k) {
      c.lower(static_cast<Index>(k)) = bounds.at(k).at(0).get<Scalar>();
      c.upper(static_cast<Index>(k)) = bounds.at(k).at(1).get<Scalar>();
    }
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.rel_tol = j.value("rel_tol", c.rel_tol);
    c.popsize_multiplier = j.value("popsize_multiplier", c.popsize_multiplier);
    if (j.contains("mutation")) {
      c.mutation_min = j.at("mutation").at(0).get<Scalar>();
      c.mutation_max = j.at("mutation").at(1).get<Scalar>();
    }
    c.crossover = j.value("crossover", c.crossover);
    c.seed = j.value("seed", c.seed);
    if (j.contains("seed_points")) {
      for (const auto& p : j.at("seed_points")) {
        const auto v = p.get<std::vector<Scalar>>();
        c.seed_points.push_back(Eigen::Map<const VectorX<Scalar>>(v.data(), static_cast<Index>(v.size())));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("DE config: ") + e.what());
  }
  return c;
}

template <typename Scalar>
nlohmann::json trace_to_json(const DEResult<Scalar>& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t g = 0; g < r.trace.size(); ++g) {
    rows.push_back({{"generation", g}, {"best_f", r.trace[g]}});
  }
  return rows;
}

}  // namespace sensekit
