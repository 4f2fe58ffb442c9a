"""Choosing the equivalence tolerance by subsampled stability.

Walks a grid of tolerances C / sqrt(n) and prints how often the sparser
skeleton stays inside the denser one across subsamples.

    python3 demos/tolerance_selection.py
"""

from cautiouspc.citest import EQUIVALENCE, CiTestConfig, correlation_from_data
from cautiouspc.delta import DeltaGrid, StabilityConfig, select_delta
from cautiouspc.metrics import evaluate_skeleton
from cautiouspc.pc import PcOptions, pc_skeleton
from cautiouspc.sim import SimConfig, simulate


def main():
    inst = simulate(SimConfig(p=10, expected_degree=7, n=500, seed=11))
    grid = DeltaGrid.scaled(1.5, 2.5, 10, 500)
    opts = PcOptions(test=CiTestConfig(EQUIVALENCE, 0.05, delta=grid.values[0]), record=False)
    sel = select_delta(inst.data, grid, StabilityConfig(reps=50, seed=0), opts)
    for (lo, hi), f in sel.trace:
        print(f"delta {lo:.4f} -> {hi:.4f}: inclusion frequency {f:.2f}")
    print(f"selected delta {sel.selected:.4f}" + (" (no drop)" if sel.no_drop else ""))
    g, _ = pc_skeleton(correlation_from_data(inst.data), PcOptions(test=CiTestConfig(EQUIVALENCE, 0.05,
                                                                                      delta=sel.selected)))
    rep = evaluate_skeleton(g, inst.dag)
    print(f"{g.n_edges} edges (truth {inst.dag.n_edges}); recall {rep.recall:.2f}, precision {rep.precision:.2f}")


if __name__ == "__main__":
    main()
