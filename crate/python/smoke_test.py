"""Smoke test for the pyhyperselect extension module."""

import json
import math

import pyhyperselect as hs


def main() -> None:
    parts = hs.Instances.partition(
        [[10, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1], [10, 9, 8, 1, 1, 2, 2, 1, 1, 1, 1, 1, 1]]
    )
    assert len(parts) == 2 and parts.domain == "partition"
    base = parts.baselines()
    assert base["oracle"].objective_total <= min(
        m.objective_total for m in base["heuristics"].values()
    )

    kp = hs.Instances.generate_knapsack(20, 15, "uncorrelated", 100, seed=4)
    trained = kp.train("K+L", seed=1, cycles=10, population=8, budget=500)
    assert len(trained.history) == 11
    outcomes = kp.solve(trained.selector, trained.setup, budget=500)
    assert len(outcomes) == 20 and all(o.solved for o in outcomes)

    again = hs.Selector.from_json(trained.selector.to_json())
    assert again.rules == trained.selector.rules
    setup = hs.Setup.from_json(trained.setup.to_json())
    assert setup.scenario == "K+L"

    sel = hs.Selector([([0.0, 0.0], 0), ([1.0, 1.0], 1)])
    assert sel.select([0.2, 0.1]) == 0
    assert sel.select([0.9, 0.8], "rbf", 1.0) == 1

    d = hs.kernel_distance("rbf", [0.0, 0.0], [1.0, 0.0], gamma=1.0)
    assert math.isclose(d, 2.0 - 2.0 * math.exp(-1.0))

    t = hs.Transform.fit("linear", [[0.0, 10.0], [4.0, 20.0]])
    assert t.apply([2.0, 15.0]) == [0.5, 0.5]
    assert json.loads(t.to_json())

    res = hs.wilcoxon_rank_sum([1, 2, 3, 4, 5], [6, 7, 8, 9, 10])
    assert res["p_value"] < 0.01
    print("smoke test passed")


if __name__ == "__main__":
    main()
