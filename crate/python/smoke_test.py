"""Smoke test for the qps extension module.

Build and install first:

    pip install --no-build-isolation -e crates/python
"""

import json
import math
from pathlib import Path

import qps

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "crates" / "core" / "configs"


def main():
    # decoupled dual box: eigenvalues are the potential samples
    m = qps.Model(0.0, [0.618034], [0.13])
    got = m.dual_eigenvalues(4)
    want = sorted(qps.potential_w([(0.13 + n * 0.618034) % 1.0]) for n in range(-4, 5))
    assert max(abs(a - b) for a, b in zip(got, want)) < 1e-12

    # self-dual point at a rational frequency
    assert qps.Model(1.0, [0.5], [0.1]).conjugation_mismatch(4) < 1e-10
    assert qps.Model(0.3, [0.4], [0.17]).conjugation_mismatch(8) < 1e-8

    levels = qps.Model(1e-3, [0.618034], [0.13]).run_multiscale(6, 3, simplicity=1e-2)
    assert [c["radius"] for c in levels] == [6, 12, 24]
    assert abs(levels[0]["energy"] - qps.potential_w([0.13])) <= 1e-3 * 2.0

    n = 256
    mask = [i / n <= 0.3 or i / n >= 0.7 for i in range(n)]
    values = [0.01 * math.sin(2 * math.pi * i / n) for i in range(n)]
    ext, report = qps.lipschitz_extension(1, n, mask, values, 0.01, 0.1)
    assert all(e == v for e, v, a in zip(ext, values, mask) if a)
    assert report["within"], report

    assert abs(qps.arcsine_mass(-2.0, 2.0) - 1.0) < 1e-15

    record = json.loads(qps.run_config(str(CONFIGS / "rational.toml"), "duality"))
    assert record["duality"]["rational"]["pass"]

    try:
        qps.run_config(str(CONFIGS / "rational.toml"), "bogus")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown subcommand accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
