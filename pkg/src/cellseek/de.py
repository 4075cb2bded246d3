"""rand-to-best/1/bin differential evolution over integer 5-gene genomes.

Genes are 1-based indices into an edge vector.  Mutants are kept real-valued
through crossover and rounded (ties away from zero) only when a gene is
committed to the trial; committed genes falling outside [1, n_edges] are not
clamped — the objective penalizes them, which culls unstable individuals.

All randomness comes from one seeded PCG64 stream of uniforms, consumed in a
fixed order (per target: r1 rejections, r2 rejections, j_rand, five gene
draws), so runs replay exactly and one generation's transcript is complete
before any trial is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fitness import FitnessValue, PENALTY
from .numeric import round_half_away

RNG_ALGORITHM = "numpy-pcg64"


class InsufficientEdges(ValueError):
    """Fewer than five edge pixels; no candidate can be formed."""


@dataclass(frozen=True)
class Candidate:
    genes: tuple[int, int, int, int, int]

    def __post_init__(self) -> None:
        if len(self.genes) != 5:
            raise ValueError("a candidate has exactly five genes")


@dataclass(frozen=True)
class DEConfig:
    population_size: int = 20
    mutation_factor: float = 0.25
    crossover_rate: float = 0.80
    iterations: int = 200
    rng_seed: int = 0
    strict_improvement: bool = False  # Eq-style <= selection by default

    def __post_init__(self) -> None:
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4")
        if not 0.0 < self.mutation_factor < 2.0:
            raise ValueError("mutation_factor must be in (0, 2)")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be in [0, 1]")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class Population:
    members: list[Candidate]
    fitnesses: list[FitnessValue]
    best_index: int
    generation: int = 0


def _best_index(fitnesses: list[FitnessValue]) -> int:
    best = 0
    for i in range(1, len(fitnesses)):
        if fitnesses[i].j < fitnesses[best].j:
            best = i
    return best


def initialize(cfg: DEConfig, objective, n_edges: int, rng: np.random.Generator) -> Population:
    """Population with genes drawn uniformly over [1, n_edges], all scored."""
    if n_edges < 5:
        raise InsufficientEdges(f"need at least 5 edge pixels, got {n_edges}")
    members = []
    for _ in range(cfg.population_size):
        genes = tuple(round_half_away(1.0 + rng.random() * (n_edges - 1)) for _ in range(5))
        members.append(Candidate(genes))
    fitnesses = [objective(c) for c in members]
    return Population(members, fitnesses, _best_index(fitnesses), generation=0)


def mutate_rand_to_best(best: Candidate, r1: Candidate, r2: Candidate, factor: float) -> tuple[float, ...]:
    """Real-valued mutant: best + factor * (r1 - r2), componentwise."""
    return tuple(b + factor * (x - y) for b, x, y in zip(best.genes, r1.genes, r2.genes))


def crossover_bin(target: Candidate, mutant: tuple[float, ...], crossover_rate: float, rng: np.random.Generator) -> Candidate:
    """Binomial crossover; j_rand is drawn first, then one uniform per gene."""
    j_rand = 1 + int(5.0 * rng.random())
    genes = []
    for j, (tg, mg) in enumerate(zip(target.genes, mutant), start=1):
        u = rng.random()
        genes.append(round_half_away(mg) if (u <= crossover_rate or j == j_rand) else tg)
    return Candidate(tuple(genes))


def select_greedy(
    parent: tuple[Candidate, FitnessValue],
    trial: tuple[Candidate, FitnessValue],
    strict: bool = False,
) -> tuple[Candidate, FitnessValue]:
    """Trial survives on j <= parent j (or strict < when configured)."""
    if trial[1].j < parent[1].j or (not strict and trial[1].j == parent[1].j):
        return trial
    return parent


def run(cfg: DEConfig, objective, n_edges: int) -> tuple[Candidate, FitnessValue, list[float]]:
    """Full evolution: returns the best candidate, its fitness and the
    per-generation best-j history (length = cfg.iterations, non-increasing).

    The objective must be pure; identical genomes are scored once and cached.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
    cache: dict[tuple[int, ...], FitnessValue] = {}

    def scored(c: Candidate) -> FitnessValue:
        fit = cache.get(c.genes)
        if fit is None:
            fit = objective(c)
            cache[c.genes] = fit
        return fit

    pop = initialize(cfg, scored, n_edges, rng)
    m = cfg.population_size
    history: list[float] = []

    for _ in range(cfg.iterations):
        best = pop.members[pop.best_index]
        trials: list[Candidate] = []
        for i in range(m):
            r1 = int(rng.random() * m)
            while r1 == i:
                r1 = int(rng.random() * m)
            r2 = int(rng.random() * m)
            while r2 == i or r2 == r1:
                r2 = int(rng.random() * m)
            mutant = mutate_rand_to_best(best, pop.members[r1], pop.members[r2], cfg.mutation_factor)
            trials.append(crossover_bin(pop.members[i], mutant, cfg.crossover_rate, rng))

        trial_fits = [scored(t) for t in trials]
        for i in range(m):
            pop.members[i], pop.fitnesses[i] = select_greedy(
                (pop.members[i], pop.fitnesses[i]),
                (trials[i], trial_fits[i]),
                strict=cfg.strict_improvement,
            )
        pop.best_index = _best_index(pop.fitnesses)
        pop.generation += 1
        history.append(pop.fitnesses[pop.best_index].j)

    return pop.members[pop.best_index], pop.fitnesses[pop.best_index], history
