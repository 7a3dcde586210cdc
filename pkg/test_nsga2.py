"""
Tests for the NSGA-II engine and its operators.
"""

import numpy as np
import pytest

from app.core.exceptions import DominanceError, EvaluationError
from app.schemas.optimization import NsgaConfig
from app.services import nsga2
from app.services.benchmarks import BENCHMARKS, zdt1, zdt1_front, zdt2_front, zdt3_front


class FixedDraw:
    """Stands in for a Generator whose tournament draw is known."""

    def __init__(self, first, second):
        self.pair = np.array([first, second])

    def choice(self, n, size, replace=False):
        return self.pair


def _brute_force_ranks(objectives):
    n = len(objectives)
    ranks = np.full(n, -1)
    remaining = set(range(n))
    rank = 0
    while remaining:
        front = {
            i for i in remaining
            if not any(nsga2.dominates(objectives[j], objectives[i]) for j in remaining if j != i)
        }
        for i in front:
            ranks[i] = rank
        remaining -= front
        rank += 1
    return ranks


# ==================== Dominance & Sorting ====================

@pytest.mark.parametrize(
    "a, b, expected",
    [
        ((1.0, 2.0), (2.0, 2.0), True),
        ((2.0, 2.0), (1.0, 2.0), False),
        ((1.0, 2.0), (2.0, 1.0), False),
        ((1.0, 1.0), (1.0, 1.0), False),
    ],
)
def test_dominates_examples(a, b, expected):
    assert nsga2.dominates(a, b) is expected


def test_dominates_length_mismatch():
    with pytest.raises(DominanceError):
        nsga2.dominates((1.0, 2.0), (1.0, 2.0, 3.0))


def test_sort_example():
    ranks, fronts = nsga2.fast_non_dominated_sort([[1, 1], [2, 2], [1, 3], [3, 1], [3, 3]])
    assert ranks.tolist() == [0, 1, 1, 1, 2]
    assert fronts == [[0], [1, 2, 3], [4]]


def test_sort_matches_brute_force(rng):
    for _ in range(100):
        n = int(rng.integers(1, 60))
        m = int(rng.integers(2, 5))
        # coarse integer grid so ties and duplicates happen
        objectives = rng.integers(0, 6, size=(n, m)).astype(float)
        ranks, fronts = nsga2.fast_non_dominated_sort(objectives)
        assert np.array_equal(ranks, _brute_force_ranks(objectives))
        assert sorted(i for front in fronts for i in front) == list(range(n))


def test_sort_large_instance_is_consistent(rng):
    objectives = rng.random((300, 3))
    ranks, fronts = nsga2.fast_non_dominated_sort(objectives)
    dom = nsga2.dominance_matrix(objectives)
    for i, j in zip(*np.nonzero(dom)):
        assert ranks[i] < ranks[j]
    for r, front in enumerate(fronts):
        if r:
            # every member is dominated by someone one rank up
            assert all(dom[fronts[r - 1]][:, k].any() for k in front)


def test_sort_rejects_unevaluated_members():
    with pytest.raises(DominanceError):
        nsga2.fast_non_dominated_sort([[1.0, 2.0], [np.nan, 1.0]])


def test_sort_empty_population():
    ranks, fronts = nsga2.fast_non_dominated_sort(np.empty((0, 2)))
    assert len(ranks) == 0 and fronts == []


# ==================== Crowding & Selection ====================

def test_crowding_three_points():
    distance = nsga2.crowding_distance([[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]])
    assert distance[0] == np.inf and distance[2] == np.inf
    assert distance[1] == pytest.approx(2.0)


def test_crowding_small_fronts_are_infinite():
    assert np.all(nsga2.crowding_distance([[0.3, 0.4]]) == np.inf)
    assert np.all(nsga2.crowding_distance([[0.3, 0.4], [0.1, 0.9]]) == np.inf)


def test_crowding_ignores_flat_objective():
    distance = nsga2.crowding_distance([[0.0, 5.0], [1.0, 5.0], [3.0, 5.0]])
    assert distance[1] == pytest.approx(1.0)


def test_crowding_rejects_empty_front():
    with pytest.raises(DominanceError):
        nsga2.crowding_distance(np.empty((0, 2)))


@pytest.mark.parametrize(
    "ranks, crowding, expected",
    [
        ([1, 0], [5.0, 1.0], 1),
        ([0, 1], [1.0, 5.0], 0),
        ([0, 0], [1.0, 2.0], 1),
        ([0, 0], [np.inf, 2.0], 0),
        ([0, 0], [2.0, 2.0], 0),
    ],
)
def test_tournament_rules(ranks, crowding, expected):
    winner = nsga2.tournament_select(np.array(ranks), np.array(crowding), FixedDraw(0, 1))
    assert winner == expected


def test_tournament_needs_two_members(rng):
    with pytest.raises(ValueError):
        nsga2.tournament_select(np.array([0]), np.array([1.0]), rng)


# ==================== Variation ====================

def test_sbx_spread_is_one_at_half():
    assert nsga2.sbx_spread(0.5, 15.0) == 1.0


def test_sbx_identical_parents(rng):
    parent = rng.random(6)
    c1, c2 = nsga2.sbx_crossover(parent, parent.copy(), 1.0, 15.0, rng)
    assert np.allclose(c1, parent, atol=1e-12)
    assert np.allclose(c2, parent, atol=1e-12)


def test_sbx_children_straddle_the_parent_midpoint(rng):
    for _ in range(200):
        p1, p2 = rng.random(5), rng.random(5)
        c1, c2 = nsga2.sbx_crossover(p1, p2, 1.0, 15.0, rng)
        middle = (p1 + p2) / 2.0
        assert np.all(np.minimum(c1, c2) <= middle + 1e-12)
        assert np.all(np.maximum(c1, c2) >= middle - 1e-12)


def test_sbx_crosses_about_half_the_genes(rng):
    p1, p2 = np.full(10_000, 0.2), np.full(10_000, 0.7)
    c1, _ = nsga2.sbx_crossover(p1, p2, 1.0, 15.0, rng)
    assert abs(np.mean(c1 != p1) - 0.5) < 0.03


def test_sbx_gene_rate_zero_copies_parents(rng):
    p1, p2 = rng.random(4), rng.random(4)
    c1, c2 = nsga2.sbx_crossover(p1, p2, 1.0, 15.0, rng, gene_rate=0.0)
    assert np.array_equal(c1, p1) and np.array_equal(c2, p2)


def test_bounded_spread_never_passes_a_parent_on_the_bound(rng):
    # a parent sitting on the bound gives beta = 1, so alpha = 1
    spread = nsga2.sbx_spread(rng.random(10_000), 15.0, alpha=1.0)
    assert np.all(spread <= 1.0)


def test_sbx_children_stay_in_bounds(rng):
    for _ in range(500):
        c1, c2 = nsga2.sbx_crossover(rng.random(4), rng.random(4), 1.0, 2.0, rng)
        assert np.all((c1 >= 0) & (c1 <= 1)) and np.all((c2 >= 0) & (c2 <= 1))
    edge = np.array([0.0, 1.0, 0.0])
    for _ in range(500):
        c1, c2 = nsga2.sbx_crossover(edge, rng.random(3), 1.0, 2.0, rng)
        assert np.all((c1 >= 0) & (c1 <= 1)) and np.all((c2 >= 0) & (c2 <= 1))


def test_sbx_rate_zero_copies_parents(rng):
    p1, p2 = rng.random(3), rng.random(3)
    c1, c2 = nsga2.sbx_crossover(p1, p2, 0.0, 15.0, rng)
    assert np.array_equal(c1, p1) and np.array_equal(c2, p2)
    assert c1 is not p1


def test_polynomial_perturbation_is_zero_at_half():
    assert nsga2.polynomial_perturbation(0.5, 0.5, 20.0) == 0.0


def test_polynomial_perturbation_respects_bounds(rng):
    x = rng.random(100_000)
    u = rng.random(100_000)
    moved = x + nsga2.polynomial_perturbation(x, u, 20.0)
    assert moved.min() >= -1e-12
    assert moved.max() <= 1.0 + 1e-12


def test_mutation_rate_zero_is_identity(rng):
    genes = rng.random(10)
    assert np.array_equal(nsga2.polynomial_mutation(genes, 0.0, 20.0, rng), genes)


def test_mutation_keeps_genes_in_unit_box(rng):
    genes = rng.random((1000, 5))
    for _ in range(20):
        genes = nsga2.polynomial_mutation(genes, 1.0, 20.0, rng)
        assert genes.min() >= 0.0 and genes.max() <= 1.0


# ==================== Survival & Runs ====================

def test_survivors_prefer_rank_then_spread():
    objectives = np.array([[0.0, 1.0], [0.5, 0.5], [0.49, 0.52], [1.0, 0.0], [2.0, 2.0]])
    keep = nsga2.survivors(objectives, 3)
    # boundaries are infinite; member 1 (1.03) outspaces member 2 (1.00)
    assert sorted(keep.tolist()) == [0, 1, 3]


def test_identity_problem_reaches_origin():
    config = NsgaConfig(population_size=100, generations=50, seed=1)
    result = nsga2.run(lambda genes: genes.copy(), 2, config)
    assert np.linalg.norm(result.front.objectives, axis=1).min() < 0.05
    assert result.stats[-1].min_f1 <= 0.05


def test_run_is_deterministic():
    config = NsgaConfig(population_size=20, generations=10, seed=4)
    a = nsga2.run(zdt1, 5, config)
    b = nsga2.run(zdt1, 5, config)
    assert np.array_equal(a.front.genes, b.front.genes)
    assert a.stats == b.stats


def test_stats_cover_every_generation():
    result = nsga2.run(zdt1, 5, NsgaConfig(population_size=20, generations=7, seed=0))
    assert [s.gen for s in result.stats] == list(range(8))
    assert result.history == []


def test_front_is_non_dominated_and_unique():
    result = nsga2.run(zdt1, 5, NsgaConfig(population_size=40, generations=20, seed=2))
    front = result.front
    assert len(front) >= 1
    ranks, _ = nsga2.fast_non_dominated_sort(front.objectives)
    assert np.all(ranks == 0)
    for i in range(len(front)):
        for j in range(i):
            assert np.abs(front.genes[i] - front.genes[j]).max() > nsga2.DUPLICATE_TOLERANCE
    assert front.genes.min() >= 0.0 and front.genes.max() <= 1.0


def test_elitism_never_loses_ground():
    result = nsga2.run(zdt1, 5, NsgaConfig(population_size=20, generations=15, seed=3), keep_history=True)
    assert len(result.history) == 16
    for previous, current in zip(result.history, result.history[1:]):
        assert not any(nsga2.dominates(p, q) for p in previous for q in current)


def test_duplicates_are_collapsed():
    genes = np.array([[0.1, 0.2], [0.1, 0.2], [0.3, 0.4]])
    front = nsga2.deduplicate(genes, genes.copy())
    assert len(front) == 2


def test_non_finite_objectives_raise():
    def broken(genes):
        return np.full((len(genes), 2), np.nan)

    with pytest.raises(EvaluationError) as exc:
        nsga2.run(broken, 3, NsgaConfig(population_size=4, generations=1))
    assert len(exc.value.genes) == 3


def test_generation_csv(tmp_path):
    result = nsga2.run(zdt1, 3, NsgaConfig(population_size=4, generations=2, seed=0))
    path = tmp_path / "generations.csv"
    nsga2.write_generation_stats(result.stats, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "gen,front_size,min_f1,max_f1,min_f2,max_f2"
    assert len(lines) == 4


# ==================== Archive ====================

def test_archive_keeps_only_non_dominated_members():
    archive = nsga2.ParetoArchive(n_var=2, n_obj=2)
    genes = np.array([[0.1, 0.1], [0.2, 0.2], [0.3, 0.3]])
    assert archive.add(genes, np.array([[2.0, 1.0], [1.0, 2.0], [3.0, 3.0]])) == 2
    front = archive.front()
    assert front.objectives.tolist() == [[1.0, 2.0], [2.0, 1.0]]
    assert front.genes.tolist() == [[0.2, 0.2], [0.1, 0.1]]

    # a newcomer that beats both replaces them
    assert archive.add(np.array([[0.9, 0.9]]), np.array([[0.5, 0.5]])) == 1
    assert archive.front().objectives.tolist() == [[0.5, 0.5]]


def test_archive_rejects_repeats_and_dominated_newcomers():
    archive = nsga2.ParetoArchive(n_var=2, n_obj=2)
    archive.add(np.array([[0.4, 0.6]]), np.array([[1.0, 1.0]]))
    assert archive.add(np.array([[0.4, 0.6]]), np.array([[1.0, 1.0]])) == 0
    assert archive.add(np.array([[0.5, 0.5]]), np.array([[1.0, 2.0]])) == 0
    # equal objectives from different genes are both kept
    assert archive.add(np.array([[0.7, 0.1]]), np.array([[1.0, 1.0]])) == 1
    assert len(archive) == 2


def test_archive_run_is_never_beaten_by_an_evaluated_individual():
    evaluated = []

    def recording(genes):
        objectives = zdt1(genes)
        evaluated.append(objectives)
        return objectives

    result = nsga2.run(recording, 5, NsgaConfig(population_size=20, generations=15, seed=6), archive=True)
    everything = np.vstack(evaluated)
    assert not nsga2._dominated_by_any(everything, result.front.objectives).any()
    ranks, _ = nsga2.fast_non_dominated_sort(result.front.objectives)
    assert np.all(ranks == 0)


def test_archive_covers_the_final_population_front():
    config = NsgaConfig(population_size=20, generations=15, seed=7)
    plain = nsga2.run(zdt1, 5, config).front
    archived = nsga2.run(zdt1, 5, config, archive=True)
    assert len(archived.front) >= 1
    for genes, objectives in zip(plain.genes, plain.objectives):
        assert any(
            np.all(np.abs(genes - g) <= nsga2.DUPLICATE_TOLERANCE) or nsga2.dominates(o, objectives)
            for g, o in zip(archived.front.genes, archived.front.objectives)
        )


# ==================== Benchmarks ====================

@pytest.mark.parametrize("name", ["zdt1", "zdt2", "zdt3"])
def test_benchmarks_hit_their_fronts_when_tail_is_zero(name):
    benchmark = BENCHMARKS[name]
    f1 = np.linspace(0.0, 1.0, 11)
    genes = np.zeros((len(f1), benchmark.n_var))
    genes[:, 0] = f1
    objectives = benchmark.evaluate(genes)
    assert np.array_equal(objectives[:, 0], f1)
    if name == "zdt1":
        assert np.allclose(objectives[:, 1], zdt1_front(f1))
    elif name == "zdt2":
        assert np.allclose(objectives[:, 1], zdt2_front(f1))
    else:
        assert np.allclose(objectives[:, 1], 1.0 - np.sqrt(f1) - f1 * np.sin(10.0 * np.pi * f1))


def test_zdt3_front_is_disconnected_and_non_dominated():
    front = zdt3_front()
    ranks, _ = nsga2.fast_non_dominated_sort(front)
    assert np.all(ranks == 0)
    # gaps in f1 where dominated arcs were removed
    assert np.diff(front[:, 0]).max() > 0.05


@pytest.mark.slow
def test_zdt1_convergence():
    benchmark = BENCHMARKS["zdt1"]
    config = NsgaConfig(population_size=100, generations=250, mutation_rate=1.0 / 30.0, seed=0)
    result = nsga2.run(benchmark.evaluate, benchmark.n_var, config)
    f1 = result.front.objectives[:, 0]
    f2 = result.front.objectives[:, 1]
    assert np.all(np.abs(f2 - zdt1_front(f1)) <= 0.05)
    assert f1.min() <= 0.05 and f1.max() >= 0.95
