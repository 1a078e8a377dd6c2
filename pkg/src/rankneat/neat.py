"""Neuroevolution of sparse linear rankers with a fixed input->output topology.

The node set never changes: every genome is a subset of the d possible
input edges, so innovation identity degenerates to the input index and
crossover aligns genes by that index alone. Deleting an edge is behaviorally
identical to forcing its weight to zero, which makes edge deletion act as a
feature-elimination operator. Fitness is the negative mean cross-entropy
over the full training set; speciation, per-species elitism and stagnation
follow the classic NEAT recipe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import core
from .core import LinearRanker, TrainTrajectory, TrajectoryPoint
from .data import PairDataset
from .errors import EmptyDatasetError, ExtinctPopulationError

FITNESS_SHIFT_EPS = 1e-6


@dataclass(frozen=True)
class NeatConfig:
    population_size: int = 100
    compatibility_threshold: float = 3.0
    elitism_per_species: int = 2
    node_mutation_rate: float = 0.0      # topology is node-fixed; must stay 0
    edge_add_rate: float = 0.5
    edge_delete_rate: float = 0.5
    weight_mutation_rate: float = 0.8
    weight_perturb_std: float = 0.5
    weight_replace_rate: float = 0.1
    survival_threshold: float = 0.2
    stagnation_limit: int = 15
    crossover_rate: float = 0.75
    compat_disjoint_coeff: float = 1.0
    compat_weight_coeff: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.compatibility_threshold <= 0:
            raise ValueError("compatibility_threshold must be positive")
        if self.node_mutation_rate != 0.0:
            raise ValueError("node mutations are not supported; rate must stay 0")
        for name in ("edge_add_rate", "edge_delete_rate", "weight_mutation_rate",
                     "weight_replace_rate", "crossover_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {rate}")
        if not 0.0 < self.survival_threshold <= 1.0:
            raise ValueError("survival_threshold must lie in (0, 1]")
        if self.elitism_per_species < 0:
            raise ValueError("elitism_per_species must be non-negative")
        if self.stagnation_limit < 1:
            raise ValueError("stagnation_limit must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class EdgeGene:
    """One input->output edge: the unit of structural evolution."""

    input_index: int
    weight: float
    enabled: bool = True


@dataclass
class Genome:
    """A set of edge genes keyed by input index; decodes to a sparse ranker."""

    genome_id: int
    dimension: int
    genes: dict[int, EdgeGene] = field(default_factory=dict)
    fitness: float | None = None

    def __post_init__(self):
        for idx, gene in self.genes.items():
            if idx != gene.input_index:
                raise ValueError(f"gene keyed {idx} carries input_index {gene.input_index}")
            if not 0 <= idx < self.dimension:
                raise ValueError(f"gene index {idx} outside [0, {self.dimension})")

    def copy(self, genome_id: int | None = None) -> "Genome":
        return Genome(
            genome_id=self.genome_id if genome_id is None else genome_id,
            dimension=self.dimension,
            genes=dict(self.genes),
            fitness=self.fitness if genome_id is None else None,
        )

    def enabled_count(self) -> int:
        return sum(1 for g in self.genes.values() if g.enabled)

    def decode(self) -> LinearRanker:
        """Enabled genes become weights; everything else is weight zero."""
        return LinearRanker(
            dimension=self.dimension,
            weights={idx: g.weight for idx, g in self.genes.items() if g.enabled},
        )


@dataclass
class Species:
    species_id: int
    representative: Genome
    members: list[int] = field(default_factory=list)
    best_fitness_history: list[float] = field(default_factory=list)
    stagnation_counter: int = 0


class Population:
    """Genomes plus their current species partition."""

    def __init__(self, genomes: list[Genome], dimension: int,
                 species: list[Species] | None = None, generation: int = 1,
                 next_genome_id: int | None = None, next_species_id: int = 0):
        self.genomes = genomes
        self.dimension = dimension
        self.species = species if species is not None else []
        self.generation = generation
        self._next_genome_id = (
            next_genome_id if next_genome_id is not None
            else 1 + max((g.genome_id for g in genomes), default=-1)
        )
        self._next_species_id = next_species_id

    def new_genome_id(self) -> int:
        gid = self._next_genome_id
        self._next_genome_id += 1
        return gid

    def new_species_id(self) -> int:
        sid = self._next_species_id
        self._next_species_id += 1
        return sid

    def by_id(self, genome_id: int) -> Genome:
        for genome in self.genomes:
            if genome.genome_id == genome_id:
                return genome
        raise KeyError(genome_id)

    def champion(self) -> Genome:
        evaluated = [g for g in self.genomes if g.fitness is not None]
        if not evaluated:
            raise ValueError("population has no evaluated genomes")
        return max(evaluated, key=lambda g: (g.fitness, -g.genome_id))


def fitness(genome: Genome, training: PairDataset) -> float:
    """Negative mean cross-entropy over the full training set (no batching)."""
    if len(training) == 0:
        raise EmptyDatasetError("cannot evaluate fitness on an empty dataset")
    return -core.mean_bce(genome.decode(), training)


def evaluate_population(population: Population, training: PairDataset) -> None:
    """Fill in fitness where unset. Evaluation is pure, so elites keep theirs."""
    for genome in population.genomes:
        if genome.fitness is None:
            genome.fitness = fitness(genome, training)


def compatibility_distance(a: Genome, b: Genome,
                           disjoint_coeff: float = 1.0,
                           weight_coeff: float = 0.5) -> float:
    """Structural distance: disjoint-gene fraction plus mean weight gap."""
    keys_a, keys_b = set(a.genes), set(b.genes)
    shared = keys_a & keys_b
    disjoint = len(keys_a ^ keys_b)
    size = max(len(keys_a), len(keys_b), 1)
    weight_gap = 0.0
    if shared:
        weight_gap = sum(abs(a.genes[k].weight - b.genes[k].weight) for k in shared)
        weight_gap /= len(shared)
    return disjoint_coeff * disjoint / size + weight_coeff * weight_gap


def speciate(population: Population, compatibility_threshold: float,
             disjoint_coeff: float = 1.0, weight_coeff: float = 0.5) -> list[Species]:
    """Greedy assignment against representatives carried over from last round.

    Each genome joins the first existing species whose representative lies
    within the threshold, else founds a new species. Afterwards each species'
    representative becomes its first current member, ready for the next round.
    """
    species = list(population.species)
    for sp in species:
        sp.members = []
    for genome in population.genomes:
        for sp in species:
            delta = compatibility_distance(genome, sp.representative,
                                           disjoint_coeff, weight_coeff)
            if delta < compatibility_threshold:
                sp.members.append(genome.genome_id)
                break
        else:
            species.append(Species(
                species_id=population.new_species_id(),
                representative=genome,
                members=[genome.genome_id],
            ))
    species = [sp for sp in species if sp.members]
    for sp in species:
        sp.representative = population.by_id(sp.members[0])
    population.species = species
    return species


def init_population(cfg: NeatConfig, dimension: int,
                    rng: np.random.Generator) -> Population:
    """Fully connected genomes with standard-normal weights, speciated."""
    if dimension < 1:
        raise ValueError("dimension must be at least 1")
    genomes = []
    for gid in range(cfg.population_size):
        weights = rng.normal(0.0, 1.0, size=dimension)
        genes = {i: EdgeGene(i, float(w)) for i, w in enumerate(weights)}
        genomes.append(Genome(genome_id=gid, dimension=dimension, genes=genes))
    population = Population(genomes, dimension)
    speciate(population, cfg.compatibility_threshold,
             cfg.compat_disjoint_coeff, cfg.compat_weight_coeff)
    return population


def mutate(genome: Genome, cfg: NeatConfig, rng: np.random.Generator,
           genome_id: int | None = None) -> Genome:
    """Structural add/delete plus per-gene weight perturbation or replacement.

    Adding on a saturated genome and deleting on an empty one are no-ops.
    Node mutations never occur: the topology is frozen at input->output.
    """
    child = genome.copy(genome_id)
    genes = dict(child.genes)

    if rng.random() < cfg.edge_add_rate:
        present_enabled = {idx for idx, g in genes.items() if g.enabled}
        candidates = sorted(set(range(genome.dimension)) - present_enabled)
        if candidates:
            idx = candidates[int(rng.integers(len(candidates)))]
            genes[idx] = EdgeGene(idx, float(rng.normal(0.0, 1.0)))

    if rng.random() < cfg.edge_delete_rate:
        present = sorted(genes)
        if present:
            del genes[present[int(rng.integers(len(present)))]]

    for idx in sorted(genes):
        roll = rng.random()
        if roll < cfg.weight_mutation_rate:
            perturbed = genes[idx].weight + rng.normal(0.0, cfg.weight_perturb_std)
            genes[idx] = replace(genes[idx], weight=float(perturbed))
        elif roll < cfg.weight_mutation_rate + cfg.weight_replace_rate:
            genes[idx] = replace(genes[idx], weight=float(rng.normal(0.0, 1.0)))

    child.genes = genes
    child.fitness = None
    return child


def crossover(parent_a: Genome, parent_b: Genome, rng: np.random.Generator,
              genome_id: int | None = None) -> Genome:
    """Align genes by input index; disjoint genes come from the fitter parent.

    Matching genes inherit from either parent uniformly at random. A fitness
    tie inherits the union of both gene sets.
    """
    if parent_a.fitness is None or parent_b.fitness is None:
        raise ValueError("both parents need an evaluated fitness")
    tie = parent_a.fitness == parent_b.fitness
    if parent_b.fitness > parent_a.fitness:
        parent_a, parent_b = parent_b, parent_a

    genes: dict[int, EdgeGene] = {}
    for idx in sorted(set(parent_a.genes) | set(parent_b.genes)):
        in_a, in_b = idx in parent_a.genes, idx in parent_b.genes
        if in_a and in_b:
            pick = parent_a if rng.random() < 0.5 else parent_b
            genes[idx] = pick.genes[idx]
        elif in_a:
            genes[idx] = parent_a.genes[idx]
        elif tie:
            genes[idx] = parent_b.genes[idx]
    return Genome(
        genome_id=parent_a.genome_id if genome_id is None else genome_id,
        dimension=parent_a.dimension,
        genes=genes,
    )


def _update_stagnation(species: list[Species], by_id) -> None:
    for sp in species:
        best = max(by_id(gid).fitness for gid in sp.members)
        if sp.best_fitness_history and best <= max(sp.best_fitness_history):
            sp.stagnation_counter += 1
        else:
            sp.stagnation_counter = 0
        sp.best_fitness_history.append(best)


def _offspring_quotas(species: list[Species], by_id, population_min: float,
                      total_offspring: int) -> dict[int, int]:
    """Largest-remainder apportionment by shifted mean fitness share."""
    shifted_means = {}
    for sp in species:
        values = [by_id(gid).fitness - population_min + FITNESS_SHIFT_EPS
                  for gid in sp.members]
        shifted_means[sp.species_id] = sum(values) / len(values)
    total_share = sum(shifted_means.values())
    raw = {sid: total_offspring * share / total_share
           for sid, share in shifted_means.items()}
    quotas = {sid: int(math.floor(r)) for sid, r in raw.items()}
    remainder = total_offspring - sum(quotas.values())
    leftovers = sorted(raw, key=lambda sid: (quotas[sid] - raw[sid], sid))
    for sid in leftovers[:remainder]:
        quotas[sid] += 1
    return quotas


def next_generation(population: Population, training: PairDataset,
                    cfg: NeatConfig, rng: np.random.Generator) -> Population:
    """Elitism, fitness-share reproduction, mutation and re-speciation.

    Stagnant species are removed unless they hold the population champion,
    so the champion's training fitness never decreases across generations.
    """
    for genome in population.genomes:
        if genome.fitness is None:
            raise ValueError("evaluate the population before breeding")

    champion_id = population.champion().genome_id
    _update_stagnation(population.species, population.by_id)
    survivors = [sp for sp in population.species
                 if sp.stagnation_counter < cfg.stagnation_limit
                 or champion_id in sp.members]
    if not survivors:
        raise ExtinctPopulationError("all species were removed by stagnation")

    ranked_members = {
        sp.species_id: sorted(
            (population.by_id(gid) for gid in sp.members),
            key=lambda g: (-g.fitness, g.genome_id),
        )
        for sp in survivors
    }
    elites = {sid: members[:min(cfg.elitism_per_species, len(members))]
              for sid, members in ranked_members.items()}
    total_elites = sum(len(v) for v in elites.values())
    total_offspring = max(0, cfg.population_size - total_elites)

    population_min = min(g.fitness for g in population.genomes)
    quotas = _offspring_quotas(survivors, population.by_id, population_min,
                               total_offspring)

    next_genomes: list[Genome] = []
    for sp in survivors:
        next_genomes.extend(elites[sp.species_id])
    for sp in survivors:
        members = ranked_members[sp.species_id]
        pool = members[:max(1, math.ceil(cfg.survival_threshold * len(members)))]
        for _ in range(quotas[sp.species_id]):
            if rng.random() < cfg.crossover_rate:
                parent_a = pool[int(rng.integers(len(pool)))]
                parent_b = pool[int(rng.integers(len(pool)))]
                child = crossover(parent_a, parent_b, rng,
                                  genome_id=population.new_genome_id())
            else:
                parent = pool[int(rng.integers(len(pool)))]
                child = parent.copy(genome_id=population.new_genome_id())
            next_genomes.append(mutate(child, cfg, rng))

    offspring = Population(
        genomes=next_genomes,
        dimension=population.dimension,
        species=survivors,
        generation=population.generation + 1,
        next_genome_id=population._next_genome_id,
        next_species_id=population._next_species_id,
    )
    speciate(offspring, cfg.compatibility_threshold,
             cfg.compat_disjoint_coeff, cfg.compat_weight_coeff)
    return offspring


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    iteration: int
    champion_fitness: float
    champion_train_acc: float
    champion_test_acc: float
    species_count: int
    mean_gene_count: float
    champion: LinearRanker


@dataclass
class EvolveResult:
    trajectory: TrainTrajectory
    stats: list[GenerationStats]


def generations_for_budget(budget: int, population_size: int) -> int:
    """Generations needed to exhaust an iteration budget at p iterations each."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    return -(-budget // population_size)


def evolve(training: PairDataset, test: PairDataset, cfg: NeatConfig,
           budget: int) -> EvolveResult:
    """Run evolution until generations * population_size covers the budget.

    Each individual's fitness evaluation counts as one iteration, so the
    recorded iteration axis is generation * population_size. The final model
    is the genome with the best training fitness; test data never informs
    selection.
    """
    generations = generations_for_budget(budget, cfg.population_size)
    rng = np.random.default_rng([cfg.seed])
    population = init_population(cfg, training.dimension, rng)
    evaluate_population(population, training)

    points: list[TrajectoryPoint] = []
    stats: list[GenerationStats] = []

    def record(generation: int) -> None:
        champ = population.champion()
        ranker = champ.decode()
        iteration = generation * cfg.population_size
        train_acc = core.pair_accuracy(ranker, training)
        test_acc = core.pair_accuracy(ranker, test)
        points.append(TrajectoryPoint(
            iteration=iteration,
            train_accuracy=train_acc,
            test_accuracy=test_acc,
            mean_loss=-champ.fitness,
        ))
        enabled = [g.enabled_count() for g in population.genomes]
        stats.append(GenerationStats(
            generation=generation,
            iteration=iteration,
            champion_fitness=champ.fitness,
            champion_train_acc=train_acc,
            champion_test_acc=test_acc,
            species_count=len(population.species),
            mean_gene_count=float(np.mean(enabled)),
            champion=ranker,
        ))

    record(1)
    for generation in range(2, generations + 1):
        population = next_generation(population, training, cfg, rng)
        evaluate_population(population, training)
        record(generation)

    return EvolveResult(
        trajectory=TrainTrajectory(points=points,
                                   final_model=population.champion().decode()),
        stats=stats,
    )


def write_evolution_log(stats: list[GenerationStats], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("generation,iteration,champion_fitness,champion_train_acc,"
                 "champion_test_acc,species_count,mean_gene_count\n")
        for row in stats:
            fh.write(f"{row.generation},{row.iteration},{row.champion_fitness!r},"
                     f"{row.champion_train_acc!r},{row.champion_test_acc!r},"
                     f"{row.species_count},{row.mean_gene_count!r}\n")


def write_champion_checkpoints(stats: list[GenerationStats], path) -> None:
    """One JSON object per line: ranker weights plus generation metadata."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in stats:
            payload = row.champion.to_json_dict()
            payload.update({
                "generation": row.generation,
                "fitness": row.champion_fitness,
                "gene_count": len(row.champion.weights),
            })
            fh.write(json.dumps(payload) + "\n")
