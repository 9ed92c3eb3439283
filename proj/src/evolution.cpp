#include "cylevo/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cylevo/parallel.hpp"

namespace cylevo {

namespace {
constexpr double kPi = std::numbers::pi;

constexpr std::array<const char*, kOperatorCount> kOperatorNames = {
    "translation",          "rotation",      "elongation",
    "dilation",             "targeted-dilation", "targeted-flip",
    "targeted-translation",
};
}  // namespace

const char* operator_name(OperatorId id) {
  return kOperatorNames[static_cast<std::size_t>(id)];
}

std::optional<OperatorId> operator_from_name(const std::string& name) {
  for (int i = 0; i < kOperatorCount; ++i)
    if (name == kOperatorNames[static_cast<std::size_t>(i)])
      return static_cast<OperatorId>(i);
  return std::nullopt;
}

ParameterBounds ParameterBounds::infer(const PointCloud& cloud, double tau) {
  const Aabb box = cloud.bounds().inflated(0.10);
  const double diag = std::max(box.diagonal(), 8.0 * tau);
  ParameterBounds b;
  b.box_lo = box.lo;
  b.box_hi = box.hi;
  b.r_min = tau;
  b.r_max = diag / 2.0;
  b.l_min = tau;
  b.l_max = diag;
  return b;
}

void ParameterBounds::validate() const {
  if (!(box_lo.x() < box_hi.x() && box_lo.y() < box_hi.y() &&
        box_lo.z() < box_hi.z()))
    throw std::invalid_argument("bounds: search box is empty");
  if (!(l_min > 0.0 && l_min <= l_max))
    throw std::invalid_argument("bounds: invalid length range");
  if (!(r_min > 0.0 && r_min <= r_max))
    throw std::invalid_argument("bounds: invalid radius range");
}

void EvolutionConfig::validate() const {
  if (!(alpha >= 0.0))
    throw std::invalid_argument("alpha must be non-negative");
  if (!(k > 1.0)) throw std::invalid_argument("growth factor k must be > 1");
  if (p_min < 1) throw std::invalid_argument("p_min must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (max_generations < 0)
    throw std::invalid_argument("max_generations must be >= 0");
  if (operator_set.empty())
    throw std::invalid_argument("operator set must not be empty");
  if (!(eta_m > 0.0) || !(eta_c > 0.0))
    throw std::invalid_argument("distribution indices must be positive");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
    throw std::invalid_argument("crossover rate must be in [0, 1]");
  if (!(radial_tolerance_factor > 0.0))
    throw std::invalid_argument("radial tolerance factor must be positive");
  if (bounds) bounds->validate();
}

ParameterBounds EvolutionConfig::effective_bounds(const PointCloud& cloud) const {
  return bounds ? *bounds : ParameterBounds::infer(cloud, tau);
}

int next_population_size(double k, int n_accepted, int p_min) {
  const double kn = k * static_cast<double>(n_accepted);
  return std::max(static_cast<int>(std::ceil(kn)), p_min);
}

double polynomial_mutation(double v, double lo, double hi, double eta_m,
                           double u) {
  if (!(hi > lo)) return v;
  const double range = hi - lo;
  const double mut_pow = 1.0 / (eta_m + 1.0);
  double deltaq;
  if (u < 0.5) {
    const double delta1 = (v - lo) / range;
    const double xy = 1.0 - delta1;
    const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta_m + 1.0);
    deltaq = std::pow(val, mut_pow) - 1.0;
  } else {
    const double delta2 = (hi - v) / range;
    const double xy = 1.0 - delta2;
    const double val =
        2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, eta_m + 1.0);
    deltaq = 1.0 - std::pow(val, mut_pow);
  }
  return std::clamp(v + deltaq * range, lo, hi);
}

double polynomial_mutation(double v, double lo, double hi, double eta_m,
                           Rng& rng) {
  return polynomial_mutation(v, lo, hi, eta_m, uniform01(rng));
}

std::pair<double, double> sbx_pair(double a, double b, double eta_c, double u) {
  if (a == b) return {a, b};
  double beta;
  if (u <= 0.5) {
    beta = std::pow(2.0 * u, 1.0 / (eta_c + 1.0));
  } else {
    beta = std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta_c + 1.0));
  }
  const double c1 = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b);
  const double c2 = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b);
  return {c1, c2};
}

Cylinder constrain(Cylinder c, const ParameterBounds& bounds) {
  c.x = std::clamp(c.x, bounds.box_lo.x(), bounds.box_hi.x());
  c.y = std::clamp(c.y, bounds.box_lo.y(), bounds.box_hi.y());
  c.z = std::clamp(c.z, bounds.box_lo.z(), bounds.box_hi.z());
  c.theta = wrap_elevation(c.theta);
  c.phi = wrap_azimuth(c.phi);
  c.l = std::clamp(c.l, bounds.l_min, bounds.l_max);
  c.r = std::clamp(c.r, bounds.r_min, bounds.r_max);
  return c;
}

Cylinder random_cylinder(const ParameterBounds& bounds, Rng& rng) {
  Cylinder c;
  c.x = uniform_in(rng, bounds.box_lo.x(), bounds.box_hi.x());
  c.y = uniform_in(rng, bounds.box_lo.y(), bounds.box_hi.y());
  c.z = uniform_in(rng, bounds.box_lo.z(), bounds.box_hi.z());
  c.theta = uniform_in(rng, -kPi, kPi);
  c.phi = uniform_in(rng, 0.0, kTwoPi);
  c.l = uniform_in(rng, bounds.l_min, bounds.l_max);
  c.r = uniform_in(rng, bounds.r_min, bounds.r_max);
  return c;
}

MutationDraw draw_mutation(Rng& rng) {
  MutationDraw d;
  for (double& u : d.fire_u) u = uniform01(rng);
  for (double& u : d.value_u) u = uniform01(rng);
  return d;
}

Cylinder apply_mutation(const Cylinder& c0, const PatchOccupancy* occ,
                        const MutationDraw& draw, const EvolutionConfig& cfg,
                        const ParameterBounds& bounds,
                        std::array<std::uint32_t, kOperatorCount>* fired) {
  Cylinder c = c0;
  const int m = cfg.operator_set.count();
  const double fire_p = 1.0 / static_cast<double>(m);

  std::optional<ContactVector> contact;
  if (occ && occ->filled_count() > 0) contact = best_contact(c0, *occ);

  auto fires = [&](OperatorId id) {
    return cfg.operator_set.contains(id) &&
           draw.fire_u[static_cast<std::size_t>(id)] < fire_p;
  };
  auto applied = [&](OperatorId id) {
    if (fired) (*fired)[static_cast<std::size_t>(id)] += 1;
  };

  if (fires(OperatorId::Translation)) {
    c.x = polynomial_mutation(c.x, bounds.box_lo.x(), bounds.box_hi.x(),
                              cfg.eta_m, draw.value_u[0]);
    c.y = polynomial_mutation(c.y, bounds.box_lo.y(), bounds.box_hi.y(),
                              cfg.eta_m, draw.value_u[1]);
    c.z = polynomial_mutation(c.z, bounds.box_lo.z(), bounds.box_hi.z(),
                              cfg.eta_m, draw.value_u[2]);
    applied(OperatorId::Translation);
  }
  if (fires(OperatorId::Rotation)) {
    c.phi = polynomial_mutation(c.phi, 0.0, kTwoPi, cfg.eta_m, draw.value_u[3]);
    c.theta = polynomial_mutation(c.theta, -kPi, kPi, cfg.eta_m, draw.value_u[4]);
    applied(OperatorId::Rotation);
  }
  if (fires(OperatorId::Elongation)) {
    c.l = polynomial_mutation(c.l, bounds.l_min, bounds.l_max, cfg.eta_m,
                              draw.value_u[5]);
    applied(OperatorId::Elongation);
  }
  if (fires(OperatorId::Dilation)) {
    c.r = polynomial_mutation(c.r, bounds.r_min, bounds.r_max, cfg.eta_m,
                              draw.value_u[6]);
    applied(OperatorId::Dilation);
  }
  if (fires(OperatorId::TargetedDilation) && contact) {
    const double r2 = polynomial_mutation(c.r, bounds.r_min, bounds.r_max,
                                          cfg.eta_m, draw.value_u[7]);
    c.x += (c.r - r2) * contact->cx;
    c.y += (c.r - r2) * contact->cy;
    c.z += (c.r - r2) * contact->cz;
    c.r = r2;
    applied(OperatorId::TargetedDilation);
  }
  if (fires(OperatorId::TargetedFlip) && contact) {
    c.x += 2.0 * c.r * contact->cx;
    c.y += 2.0 * c.r * contact->cy;
    c.z += 2.0 * c.r * contact->cz;
    applied(OperatorId::TargetedFlip);
  }
  if (fires(OperatorId::TargetedTranslation) && contact) {
    const double tp = c.theta - kPi / 2.0;
    const double half_r = c.r / 2.0;
    c.x += contact->cx * half_r * std::sin(c.phi) * std::cos(tp);
    c.y += contact->cy * half_r * std::cos(c.phi) * std::cos(tp);
    c.z += contact->cz * half_r * std::sin(tp);
    applied(OperatorId::TargetedTranslation);
  }
  return constrain(c, bounds);
}

Cylinder mutate(const Cylinder& c, const PatchOccupancy& occ,
                const EvolutionConfig& cfg, Rng& rng) {
  if (!cfg.bounds)
    throw std::invalid_argument("mutate: cfg.bounds must be set");
  return apply_mutation(c, &occ, draw_mutation(rng), cfg, *cfg.bounds, nullptr);
}

CrossoverDraw draw_crossover(const EvolutionConfig& cfg, Rng& rng) {
  CrossoverDraw d;
  d.enabled = uniform01(rng) < cfg.crossover_rate;
  for (bool& s : d.swap_block) s = uniform01(rng) < 0.5;
  for (double& u : d.value_u) u = uniform01(rng);
  return d;
}

std::pair<Cylinder, Cylinder> apply_crossover(const Cylinder& a,
                                              const Cylinder& b,
                                              const CrossoverDraw& draw,
                                              const EvolutionConfig& cfg,
                                              const ParameterBounds& bounds) {
  if (!draw.enabled) return {a, b};
  Cylinder c1 = a;
  Cylinder c2 = b;

  // Exchanged blocks take SBX values crosswise so that beta = 1 reproduces an
  // exact block swap; kept blocks pass straight through.
  auto mix = [&](double Cylinder::*field, std::size_t u_idx) {
    const auto [v1, v2] = sbx_pair(a.*field, b.*field, cfg.eta_c,
                                   draw.value_u[u_idx]);
    c1.*field = v2;
    c2.*field = v1;
  };
  if (draw.swap_block[0]) {
    mix(&Cylinder::x, 0);
    mix(&Cylinder::y, 1);
    mix(&Cylinder::z, 2);
  }
  if (draw.swap_block[1]) {
    mix(&Cylinder::phi, 3);
    mix(&Cylinder::theta, 4);
  }
  if (draw.swap_block[2]) mix(&Cylinder::l, 5);
  if (draw.swap_block[3]) mix(&Cylinder::r, 6);
  return {constrain(c1, bounds), constrain(c2, bounds)};
}

std::pair<Cylinder, Cylinder> crossover(const Cylinder& a, const Cylinder& b,
                                        const EvolutionConfig& cfg, Rng& rng) {
  if (!cfg.bounds)
    throw std::invalid_argument("crossover: cfg.bounds must be set");
  return apply_crossover(a, b, draw_crossover(cfg, rng), cfg, *cfg.bounds);
}

namespace {

struct Individual {
  Cylinder cylinder;
  PatchOccupancy occupancy;
  double realized = 0.0;
  bool accepted = false;
};

// Rank criterion: realized fitness descending; ties keep the earlier pool
// entry (parents precede offspring, so an incumbent survives a tie).
std::vector<std::size_t> ranked_order(const std::vector<Individual>& pool) {
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pool[a].realized > pool[b].realized;
  });
  return order;
}

void score_realized(std::vector<Individual>& pool, std::size_t n_points,
                    double alpha) {
  std::vector<const PatchOccupancy*> occs;
  occs.reserve(pool.size());
  for (const Individual& ind : pool) occs.push_back(&ind.occupancy);
  const std::vector<double> realized = realized_fitness_values(occs, n_points);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool[i].realized = realized[i];
    pool[i].accepted = realized[i] >= alpha;
  }
}

// Binary tournament on the ranked population: lower rank index wins.
std::size_t tournament(std::size_t pop_size, Rng& rng) {
  const std::size_t a = uniform_index(rng, pop_size);
  const std::size_t b = uniform_index(rng, pop_size);
  return std::min(a, b);
}

}  // namespace

EvolveResult evolve(const PointCloud& cloud, const EvolutionConfig& cfg) {
  cfg.validate();
  if (cloud.empty()) throw std::invalid_argument("evolve: empty point cloud");
  const ParameterBounds bounds = cfg.effective_bounds(cloud);
  bounds.validate();
  const FitnessEvaluator eval(cloud, cfg.tau, cfg.radial_tolerance_factor);

  std::vector<Individual> pop(static_cast<std::size_t>(cfg.p_min));
  parallel_for(pop.size(), cfg.threads, [&](std::size_t i) {
    Rng rng = make_rng(cfg.rng_seed, 0x1417u, i);
    pop[i].cylinder = constrain(random_cylinder(bounds, rng), bounds);
    pop[i].occupancy = eval.evaluate(pop[i].cylinder);
  });
  score_realized(pop, cloud.size(), cfg.alpha);
  {
    std::vector<Individual> sorted;
    sorted.reserve(pop.size());
    for (std::size_t idx : ranked_order(pop)) sorted.push_back(std::move(pop[idx]));
    pop = std::move(sorted);
  }

  std::vector<GenerationReport> reports;
  reports.reserve(static_cast<std::size_t>(cfg.max_generations) + 1);
  auto report_of = [&](int gen,
                       const std::array<std::uint32_t, kOperatorCount>& ops) {
    GenerationReport rep;
    rep.generation = gen;
    rep.population_size = static_cast<int>(pop.size());
    rep.best_realized = pop.empty() ? 0.0 : pop.front().realized;
    rep.accepted_count = static_cast<int>(
        std::count_if(pop.begin(), pop.end(),
                      [](const Individual& s) { return s.accepted; }));
    rep.operator_applications = ops;
    return rep;
  };
  reports.push_back(report_of(0, {}));

  for (int gen = 1; gen <= cfg.max_generations; ++gen) {
    const int n_prev = reports.back().accepted_count;
    const std::size_t target = static_cast<std::size_t>(
        next_population_size(cfg.k, n_prev, cfg.p_min));

    const std::size_t n_pairs = (target + 1) / 2;
    std::vector<Individual> offspring(target);
    std::vector<std::array<std::uint32_t, kOperatorCount>> pair_ops(n_pairs);

    parallel_for(n_pairs, cfg.threads, [&](std::size_t pair) {
      Rng rng = make_rng(cfg.rng_seed, 0x0FF5u + static_cast<std::uint64_t>(gen),
                         pair);
      const std::size_t i1 = tournament(pop.size(), rng);
      const std::size_t i2 = tournament(pop.size(), rng);
      const CrossoverDraw cd = draw_crossover(cfg, rng);
      const auto [ch1, ch2] =
          apply_crossover(pop[i1].cylinder, pop[i2].cylinder, cd, cfg, bounds);

      const std::array<const Cylinder*, 2> children = {&ch1, &ch2};
      const std::array<std::size_t, 2> parents = {i1, i2};
      for (int which = 0; which < 2; ++which) {
        const std::size_t slot = 2 * pair + static_cast<std::size_t>(which);
        if (slot >= target) break;
        const Cylinder& child = *children[static_cast<std::size_t>(which)];
        const MutationDraw md = draw_mutation(rng);

        // Contact anchoring: reuse the parent's cached occupancy when the
        // child genome is unchanged, otherwise score the child first.
        const Individual& parent = pop[parents[static_cast<std::size_t>(which)]];
        PatchOccupancy scratch;
        const PatchOccupancy* contact_occ = nullptr;
        bool needs_contact = false;
        for (OperatorId id : {OperatorId::TargetedDilation,
                              OperatorId::TargetedFlip,
                              OperatorId::TargetedTranslation}) {
          needs_contact |= cfg.operator_set.contains(id) &&
                           md.fire_u[static_cast<std::size_t>(id)] <
                               1.0 / cfg.operator_set.count();
        }
        if (needs_contact) {
          if (child == parent.cylinder) {
            contact_occ = &parent.occupancy;
          } else {
            scratch = eval.evaluate(child);
            contact_occ = &scratch;
          }
        }

        Individual& out = offspring[slot];
        out.cylinder =
            apply_mutation(child, contact_occ, md, cfg, bounds, &pair_ops[pair]);
        if (contact_occ && out.cylinder == *children[static_cast<std::size_t>(which)] &&
            contact_occ == &scratch) {
          out.occupancy = std::move(scratch);
        } else if (out.cylinder == parent.cylinder) {
          out.occupancy = parent.occupancy;
        } else {
          out.occupancy = eval.evaluate(out.cylinder);
        }
      }
    });

    std::array<std::uint32_t, kOperatorCount> gen_ops{};
    for (const auto& ops : pair_ops)
      for (int o = 0; o < kOperatorCount; ++o)
        gen_ops[static_cast<std::size_t>(o)] += ops[static_cast<std::size_t>(o)];

    std::vector<Individual> pool;
    pool.reserve(pop.size() + offspring.size());
    for (Individual& ind : pop) pool.push_back(std::move(ind));
    for (Individual& ind : offspring) pool.push_back(std::move(ind));
    score_realized(pool, cloud.size(), cfg.alpha);

    const std::vector<std::size_t> order = ranked_order(pool);
    pop.clear();
    pop.reserve(target);
    for (std::size_t k = 0; k < target && k < order.size(); ++k)
      pop.push_back(std::move(pool[order[k]]));

    reports.push_back(report_of(gen, gen_ops));
  }

  EvolveResult result;
  result.population.solutions.reserve(pop.size());
  for (Individual& ind : pop) {
    result.population.solutions.push_back(ScoredSolution{
        ind.cylinder, std::move(ind.occupancy), ind.realized, ind.accepted});
  }
  result.reports = std::move(reports);
  return result;
}

std::vector<SingletonStep> evolve_singleton(const PointCloud& cloud,
                                            const EvolutionConfig& cfg) {
  cfg.validate();
  if (cloud.empty())
    throw std::invalid_argument("evolve_singleton: empty point cloud");
  const ParameterBounds bounds = cfg.effective_bounds(cloud);
  bounds.validate();
  const FitnessEvaluator eval(cloud, cfg.tau, cfg.radial_tolerance_factor);

  Rng rng = make_rng(cfg.rng_seed, 0x51u);
  Cylinder incumbent = cfg.init_solution ? *cfg.init_solution
                                         : random_cylinder(bounds, rng);
  if (cfg.init_center) {
    incumbent.x = cfg.init_center->x();
    incumbent.y = cfg.init_center->y();
    incumbent.z = cfg.init_center->z();
  }
  incumbent = constrain(incumbent, bounds);
  PatchOccupancy occ = eval.evaluate(incumbent);

  std::vector<SingletonStep> trajectory;
  trajectory.reserve(static_cast<std::size_t>(cfg.max_generations) + 1);
  trajectory.push_back({incumbent, occ.potential_fitness});

  for (int step = 0; step < cfg.max_generations; ++step) {
    const MutationDraw md = draw_mutation(rng);
    const Cylinder candidate =
        apply_mutation(incumbent, &occ, md, cfg, bounds, nullptr);
    PatchOccupancy cand_occ = eval.evaluate(candidate);
    if (cand_occ.potential_fitness >= occ.potential_fitness) {
      incumbent = candidate;
      occ = std::move(cand_occ);
    }
    trajectory.push_back({incumbent, occ.potential_fitness});
  }
  return trajectory;
}

}  // namespace cylevo
