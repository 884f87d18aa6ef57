"""Smoke test for the `tdpf` extension module.

Build and run from the repository root:

    cargo build -p tdpf-py --release
    cp target/release/libtdpf.so python/tdpf.so
    python3 python/smoke_test.py

Pass --flow to also build the gyre roadmap (about 15 s).
"""

import json
import math
import sys

import tdpf

INF = math.inf


def time_functions():
    edge = tdpf.TimeFn([(3.5, 1.2), (0.0, 5.1)])
    assert edge.default == INF
    assert edge.eval(0.0) == INF
    assert edge.eval_after(0.0) == 5.1
    assert edge.eval(3.5) == 5.1 and edge.eval(3.6) == 1.2
    assert len(edge) == 3  # intervals, counting the default one

    loop = tdpf.TimeFn([(0.0, 1.6)])
    chained = loop.chain(edge)
    assert chained.eval(2.0) == 2.8  # exact, unlike 1.6 + 1.2 in floats
    assert chained.eval(1.0) == 6.7

    low, (witness, default) = tdpf.min_with_witness([edge, chained])
    assert low.eval(1.0) == 5.1
    assert witness[0] == (3.5, 0) and default is None
    assert edge.simplify(10.0) == tdpf.TimeFn([(0.0, 1.2)])
    assert edge == tdpf.TimeFn.from_json(edge.to_json())

    try:
        tdpf.TimeFn([(0.0, 1.0), (2.0, 1.0)])
    except ValueError:
        pass
    else:
        raise AssertionError("ascending breakpoints accepted")


def two_state():
    g = tdpf.Graph.from_json(tdpf.TWO_STATE_JSON)
    assert g.ids == [0, 1] and g.goals == [1]
    sol = g.solve()
    assert sol.iterations == 5
    assert sol.travel(0).pieces == [(3.5, 1.2), (1.9, 2.8), (0.3, 4.4), (0.0, 5.1)]

    path = sol.extract_path(0, 1.0)
    assert path["states"] == [0, 0, 0, 1]
    assert math.isclose(path["travel_time"], 4.4)
    for t in (0.0, 0.2, 1.0, 2.5, 4.0):
        oracle, _ = g.min_travel(0, t)
        table = sol.travel(0).eval_after(t) if t == 0 else sol.travel(0).eval(t)
        assert oracle == table, (t, oracle, table)

    best, intervals = sol.best_departure(0, 0.0, 10.0)
    assert best == 1.2 and intervals == [(3.5, 10.0)]

    direct = json.dumps({"states": {"0": {"policy": {"pieces": [], "default": 1}}}})
    assert g.evaluate_policy(direct)[0] == g.edge(0, 1)
    try:
        g.solve(cap=3)
    except tdpf.NotConvergedError:
        pass
    else:
        raise AssertionError("cap of 3 converged")


def flow(build_roadmap):
    scene = tdpf.Scene.from_json(tdpf.GYRE_SCENE_JSON)
    u, v = scene.velocity(5.0, 2.5, 0.0)
    assert abs(u) < 1e-12 and math.isclose(v, 3.0)
    assert scene.edge_time((2.5, 2.5), (3.0, 2.5), 5.0) is not None
    if not build_roadmap:
        return
    g = scene.roadmap()
    sol = g.solve()
    at_zero = sol.travel(0).eval_after(0.0)
    best, _ = sol.best_departure(0, 0.0, 30.0)
    print(f"gyre: T(0+) = {at_zero}, best departure {best}")
    assert best < at_zero


def main():
    time_functions()
    two_state()
    flow("--flow" in sys.argv)
    print("smoke test passed")


if __name__ == "__main__":
    main()
