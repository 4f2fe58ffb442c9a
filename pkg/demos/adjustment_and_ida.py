"""From data to an adjusted effect estimate on a four-variable example.

Two covariates W1, W2 confound the effect of A on Y. The script checks which
covariate sets are valid adjustment sets in the true graph, learns a CPDAG
with the equivalence test, and reports the IDA multiset of effect estimates.

    python3 demos/adjustment_and_ida.py
"""

import itertools

import numpy as np

from cautiouspc.adjustment import is_adjustment_set
from cautiouspc.citest import EQUIVALENCE, CiTestConfig, correlation_from_data
from cautiouspc.graph import MixedGraph
from cautiouspc.ida import ida_multiset, oracle_effect
from cautiouspc.meek import BackgroundKnowledge
from cautiouspc.pc import PcOptions, pc
from cautiouspc.sim import simulate_linear_gaussian

W1, W2, A, Y = range(4)
NAMES = ["W1", "W2", "A", "Y"]


def main():
    truth = MixedGraph.from_directed_edges(4, [(W1, A), (W1, Y), (A, Y), (W2, Y), (W2, A)], NAMES)
    print("valid adjustment sets for the effect of A on Y:")
    for k in range(3):
        for w in itertools.combinations([W1, W2], k):
            ok = is_adjustment_set(truth, {A}, Y, set(w))
            print(f"  {{{', '.join(NAMES[v] for v in w)}}}: {ok}")

    weights = np.zeros((4, 4))
    weights[W1, A], weights[W2, A], weights[W1, Y], weights[A, Y], weights[W2, Y] = 0.5, 0.4, 0.4, 0.3, -0.5
    data = simulate_linear_gaussian(truth, weights, 5000, seed=3)

    test = CiTestConfig(EQUIVALENCE, 0.05, delta_scale=2.0)
    bk = BackgroundKnowledge([[W1, W2], [A], [Y]])
    g, _, _ = pc(correlation_from_data(data), PcOptions(test=test), bk)
    g.names = NAMES
    print("\nlearned graph:\n" + g.to_text())

    ms = ida_multiset(g, data, A, Y)
    for est, ps in zip(ms.estimates, ms.parent_sets):
        print(f"estimate {est:+.3f} adjusting for {{{', '.join(NAMES[v] for v in ps)}}}")
    print(f"oracle estimate {oracle_effect(truth, data, A, Y):+.3f}; true coefficient {weights[A, Y]:+.3f}")


if __name__ == "__main__":
    main()
