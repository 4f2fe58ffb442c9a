import numpy as np
import pytest

from cautiouspc.citest import CLASSICAL, EQUIVALENCE, CiTestConfig, CorrelationMatrix, DSepOracle, correlation_from_data
from cautiouspc.fci import FciOptions, fci, fci_equals_pc_check
from cautiouspc.graph import Kind, Mark, MixedGraph, dag_to_cpdag, is_acyclic
from cautiouspc.meek import BackgroundKnowledge
from cautiouspc.pc import PcOptions, pc_skeleton
from cautiouspc.sim import SimConfig, simulate

from conftest import latent_projection, rand_dag


def _dag_with_latents(seed):
    """Random DAG on the observed vertices plus 1-3 latent parents of observed pairs."""
    rng = np.random.default_rng(seed)
    p_obs = int(rng.integers(3, 6))
    n_lat = int(rng.integers(1, 4))
    base = rand_dag(p_obs, 1.5, seed)
    edges = [(e.a, e.b) if e.mark_at_b == Mark.ARROW else (e.b, e.a) for e in base.edges()]
    for k in range(n_lat):
        u = p_obs + k
        a, b = (int(v) for v in rng.choice(p_obs, 2, replace=False))
        edges += [(u, a), (u, b)]
    return MixedGraph.from_directed_edges(p_obs + n_lat, edges), list(range(p_obs))


def _ancestral_violation(g: MixedGraph) -> bool:
    """Directed cycle, or a bidirected edge whose ends are joined by a directed path."""
    if not is_acyclic(g):
        return True
    d = g.directed_adjacency().astype(bool)
    reach = d.copy()
    for k in range(g.p):
        reach |= reach[:, [k]] & reach[[k], :]
    return any(e.is_bidirected and (reach[e.a, e.b] or reach[e.b, e.a]) for e in g.edges())


def test_y_structure_orients_visible_cause():
    # 0 -> 2 <- 1, 2 -> 3
    dag = MixedGraph.from_directed_edges(4, [(0, 2), (1, 2), (2, 3)])
    pag, _, _ = fci(DSepOracle(dag))
    assert pag.is_directed(2, 3)
    assert pag.mark(0, 2) == Mark.ARROW and pag.mark(2, 0) == Mark.CIRCLE
    assert pag.mark(1, 2) == Mark.ARROW and pag.mark(2, 1) == Mark.CIRCLE
    assert pag.kind == Kind.PAG


def test_edgeless_truth_gives_edgeless_pag():
    pag, _, _ = fci(DSepOracle(MixedGraph(4)))
    assert pag.n_edges == 0


def test_oracle_on_example_is_compatible_with_cpdag(fig_b):
    pag, _, _ = fci(DSepOracle(fig_b))
    cp = dag_to_cpdag(fig_b)
    assert pag.adjacency_pairs() == cp.adjacency_pairs()
    for a, b in cp.adjacency_pairs():
        for x, y in ((a, b), (b, a)):
            if cp.mark(x, y) == Mark.ARROW:
                assert pag.mark(x, y) in (Mark.ARROW, Mark.CIRCLE)


def test_oracle_validity_with_latent_confounders():
    for seed in range(100):
        dag, obs = _dag_with_latents(seed)
        mag = latent_projection(dag, obs)
        pag, _, _ = fci(DSepOracle(dag, obs))
        assert pag.adjacency_pairs() == mag.adjacency_pairs(), seed
        for a in range(len(obs)):
            for b in pag.adj(a):
                if pag.mark(a, b) == Mark.ARROW:
                    assert mag.mark(a, b) == Mark.ARROW, seed
                if pag.mark(a, b) == Mark.TAIL:
                    assert mag.mark(a, b) == Mark.TAIL, seed


def test_latent_confounder_gives_bidirected_edge():
    # 0 -> 1 <-> 2 <- 3 with the confounder of 1 and 2 latent (vertex 4)
    dag = MixedGraph.from_directed_edges(5, [(0, 1), (3, 2), (4, 1), (4, 2)])
    pag, _, _ = fci(DSepOracle(dag, [0, 1, 2, 3]))
    assert pag.mark(1, 2) == Mark.ARROW and pag.mark(2, 1) == Mark.ARROW


def test_no_almost_directed_cycles():
    for seed in range(100):
        dag, obs = _dag_with_latents(seed)
        pag, _, _ = fci(DSepOracle(dag, obs))
        assert not _ancestral_violation(pag), seed
    for seed in range(30):
        inst = simulate(SimConfig(p=6, expected_degree=2.5, n=500, seed=seed))
        pag, _, _ = fci(correlation_from_data(inst.data), FciOptions(test=CiTestConfig(CLASSICAL, 0.05)))
        assert not _ancestral_violation(pag), seed


def test_fci_adjacencies_within_pc_adjacencies():
    for seed in range(40):
        inst = simulate(SimConfig(p=7, expected_degree=3.0, n=400, seed=seed))
        corr = correlation_from_data(inst.data)
        for cfg in (CiTestConfig(CLASSICAL, 0.05), CiTestConfig(EQUIVALENCE, 0.05, delta_scale=2.0)):
            skel, _ = pc_skeleton(corr, PcOptions(test=cfg))
            pag, _, _ = fci(corr, FciOptions(test=cfg))
            assert pag.adjacency_pairs() <= skel.adjacency_pairs()


def test_fci_equals_pc_check_on_confounder_free_oracle():
    for seed in range(20):
        assert fci_equals_pc_check(DSepOracle(rand_dag(6, 2.5, seed)))


def test_fci_equals_pc_check_trivial_and_refusal():
    c = CorrelationMatrix.from_correlation(np.eye(4), 1000)
    opts = FciOptions(test=CiTestConfig(EQUIVALENCE, 0.05, delta=0.2))
    assert fci_equals_pc_check(c, opts)
    other = PcOptions(test=CiTestConfig(EQUIVALENCE, 0.05, delta=0.3))
    with pytest.raises(ValueError):
        fci_equals_pc_check(c, opts, other)


def test_fci_tiers_put_arrowheads_at_later_tiers():
    bk = BackgroundKnowledge([[0, 1], [2, 3], [4, 5]])
    for seed in range(15):
        inst = simulate(SimConfig(p=6, expected_degree=2.5, n=500, seed=seed))
        pag, _, _ = fci(correlation_from_data(inst.data), FciOptions(test=CiTestConfig(CLASSICAL, 0.05), bk=bk))
        for a in range(6):
            for b in pag.adj(a):
                # a later vertex is never an ancestor of an earlier one
                if bk.tier_of(a) < bk.tier_of(b):
                    assert pag.mark(a, b) == Mark.ARROW


def test_fci_report_records_pds_phase():
    dag, obs = _dag_with_latents(3)
    _, _, report = fci(DSepOracle(dag, obs))
    assert report.config["algorithm"] == "fci"
    assert {r[6] for r in report.rows()} <= {"skeleton", "pds"}
