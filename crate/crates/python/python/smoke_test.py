# Copyright 2026 The trilevel Authors
# SPDX-License-Identifier: Apache-2.0
"""Smoke test for the pytrilevel extension module.

Build with `cargo build --release -p trilevel-py`, then run with the
directory holding `pytrilevel.so` on PYTHONPATH (see the README).
"""

import math

import pytrilevel as t


def main():
    run = t.run_two_step()
    r = run.result
    assert abs(r.omega12_hat - 1.0) <= 0.02, r
    assert not r.noisy
    traj = run.trajectory()
    assert len(traj["t"]) == len(run) == 2001
    assert abs(traj["t"][-1] - 200.0) < 1e-9

    noisy = t.run_two_step(seed=1, noise_output=0.2, noise_input=0.1)
    assert noisy.result.noisy and noisy.result.seed == 1

    runs = t.monte_carlo(4, seed0=1, noise_output=0.2, noise_input=0.1, jobs=2)
    assert [x.seed for x in runs] == [1, 2, 3, 4]

    t12, t23 = t.predicted_times()
    assert abs(t12 - 6 * math.pi) < 1e-12 and abs(t23 - 45 * math.pi) < 1e-9

    _, evs = t.linearized12()
    assert all(abs(re + 1 / 6) < 1e-9 and abs(im) < 1e-9 for re, im in evs)

    gap = t.labframe_compare(2 * math.pi / 0.1)
    assert gap <= 0.05, gap

    text = t.parse_config("plant.omega23 = 0.8")
    assert "plant.omega23 = 0.8" in text
    try:
        t.parse_config("gains12.epsilon = -1")
    except ValueError as e:
        assert "gains12.epsilon" in str(e)
    else:
        raise AssertionError("negative epsilon accepted")

    sz = t.build_operator("sigma_z", 1, 2)
    assert sz[0][0] == 1.0 and sz[1][1] == -1.0
    s = t.PureState([1.0, 1.0, 0.0])
    assert abs(s.population(1) - 0.5) < 1e-15
    assert abs(s.fidelity(t.PureState([1.0, 0.0, 0.0])) - 0.5) < 1e-15

    print("pytrilevel smoke test passed:", r)


if __name__ == "__main__":
    main()
