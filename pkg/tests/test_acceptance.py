"""Exit criteria. Each test checks one criterion at its fixed tolerance and
records a PASS/FAIL line, printed in the terminal summary (see conftest.py)."""
import io
import math
import time
from pathlib import Path

import numpy as np
import pytest

from relayqkd import model
from relayqkd.cli import run
from relayqkd.model import LinkParams, Scheme
from relayqkd.simulate import enumerate_exact, mc_estimate
from relayqkd.sweep import (
    TWO_WAY_BOUND,
    db_from_transmission,
    find_threshold,
    transmission_from_db,
)

GOLDEN = Path(__file__).parent / "golden"
GRID = np.logspace(-6, 0, 50)
PARAMS = LinkParams()

RESULTS: list[str] = []


def record(number: int, title: str, failures: list[str], detail: str = "") -> None:
    status = "PASS" if not failures else "FAIL"
    line = f"[{status}] criterion {number}: {title}"
    if detail:
        line += f" ({detail})"
    if failures:
        line += " -- " + "; ".join(failures)
    RESULTS.append(line)
    print(line)
    assert not failures, line


def check(failures: list[str], ok: bool, message: str) -> None:
    if not ok:
        failures.append(message)


def cli(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, out=out, err=err)
    return code, out.getvalue()


def kv(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines() if line)


def test_criterion_1_direct_crossing():
    fails = []
    start = time.perf_counter()
    code, out = cli(["threshold", "--scheme", "direct", "--target", "0.20"])
    elapsed = time.perf_counter() - start
    res = kv(out)
    db, km = float(res["crossing_db"]), float(res["crossing_km"])
    check(fails, code == 0, f"exit {code}")
    check(fails, round(db, 2) == 37.77, f"crossing {db:.4f} dB does not round to 37.77")
    check(fails, abs(db - 37.5) <= 0.5, f"crossing {db:.4f} dB more than 0.5 dB from 37.5")
    check(fails, 148 <= km <= 152, f"distance {km:.2f} km outside [148, 152]")
    check(fails, elapsed < 1.0, f"runtime {elapsed:.3f} s")
    record(1, "direct 20% crossing", fails, f"{db:.4f} dB, {km:.2f} km, {elapsed * 1e3:.1f} ms")


def test_criterion_2_relay_superiority():
    fails = []
    start = time.perf_counter()
    d = find_threshold(Scheme.DIRECT, TWO_WAY_BOUND, PARAMS)
    r = find_threshold(Scheme.RELAY, TWO_WAY_BOUND, PARAMS)
    elapsed = time.perf_counter() - start
    gain = r.crossing_db - d.crossing_db
    check(fails, gain >= 15.0, f"relay gain {gain:.3f} dB < 15 dB")
    check(fails, 55.0 <= r.crossing_db <= 66.0, f"relay crossing {r.crossing_db:.3f} dB outside [55, 66]")
    check(fails, elapsed < 1.0, f"runtime {elapsed:.3f} s")
    record(2, "relay crossing beyond direct", fails,
           f"relay {r.crossing_db:.4f} dB / {r.crossing_km:.1f} km, gain {gain:.2f} dB")


def test_criterion_3_enumeration_oracle():
    fails = []
    start = time.perf_counter()
    worst_q = worst_p = 0.0
    for scheme in Scheme:
        for t in GRID:
            exact = enumerate_exact(scheme, float(t), PARAMS)
            dq = abs(model.qber(scheme, t, PARAMS) - exact.qber)
            dp = abs(model.p_sift(scheme, t, PARAMS) - exact.p_sift) / exact.p_sift
            worst_q, worst_p = max(worst_q, dq), max(worst_p, dp)
            check(fails, dq <= 1e-9, f"{scheme.value} t={t:.3g}: |dqber|={dq:.3g}")
            check(fails, dp <= 1e-12, f"{scheme.value} t={t:.3g}: rel dp_sift={dp:.3g}")
    elapsed = time.perf_counter() - start
    check(fails, elapsed < 10.0, f"runtime {elapsed:.2f} s")
    record(3, "closed form vs enumeration oracle", fails,
           f"max |dqber| {worst_q:.2g}, max rel dp_sift {worst_p:.2g}, {elapsed:.2f} s")


@pytest.mark.slow
def test_criterion_4_monte_carlo():
    fails = []
    start = time.perf_counter()
    n_points = 0
    worst = 0.0
    for k, scheme in enumerate(Scheme):
        for i, t in enumerate(GRID):
            q, ps = model.qber(scheme, t, PARAMS), model.p_sift(scheme, t, PARAMS)
            if ps < 1e-5:
                continue
            est = mc_estimate(scheme, float(t), PARAMS, 10**7, seed=1000 * k + i)
            z = abs(est.qber_hat - q) / est.stderr
            worst = max(worst, z)
            n_points += 1
            check(fails, z <= 4.0, f"{scheme.value} t={t:.3g}: {z:.2f} sigma")
    elapsed = time.perf_counter() - start
    check(fails, n_points > 0, "no grid point above the sift floor")
    check(fails, elapsed < 60.0, f"runtime {elapsed:.1f} s")
    record(4, "Monte Carlo within 4 sigma", fails, f"{n_points} points, worst {worst:.2f} sigma, {elapsed:.1f} s")


ANCHORS = [
    ("qber(direct, t=1)", Scheme.DIRECT, 1.0, 0.050992, 1e-6),
    ("qber(relay, t=1)", Scheme.RELAY, 1.0, 0.096958, 1e-6),
    ("qber(direct, 37.5 dB)", Scheme.DIRECT, transmission_from_db(37.5), 0.19661, 1e-5),
    ("qber(relay, 65 dB)", Scheme.RELAY, transmission_from_db(65.0), 0.24272, 1e-5),
]


def test_criterion_5_anchor_values():
    fails = []
    shown = []
    for label, scheme, t, expected, tol in ANCHORS:
        got = model.qber(scheme, t, PARAMS)
        oracle = enumerate_exact(scheme, t, PARAMS).qber
        shown.append(f"{label}={got:.7f}")
        check(fails, abs(got - oracle) <= 1e-12, f"{label}: model {got!r} != oracle {oracle!r}")
        check(fails, abs(got - expected) <= tol,
              f"{label}: {got:.7f} vs stated {expected} +/- {tol:g} (off by {abs(got - expected):.2g})")
    record(5, "analytic anchor values", fails, ", ".join(shown))


def test_criterion_6_properties():
    fails = []
    for scheme in Scheme:
        q = [model.qber(scheme, t, PARAMS) for t in np.logspace(0, -12, 200)]
        check(fails, all(b >= a for a, b in zip(q, q[1:])), f"{scheme.value}: QBER not monotone")
        q120 = model.qber(scheme, 1e-12, PARAMS)
        check(fails, abs(q120 - 0.5) <= 1e-3, f"{scheme.value}: QBER at 120 dB is {q120:.6f}, |.-0.5| > 1e-3")

    dark_free = LinkParams(dark_count_prob=0.0)
    for scheme in Scheme:
        floor = 0.5 * (1 - dark_free.visibility**scheme.arms)
        exact = all(model.qber(scheme, t, dark_free) == floor for t in np.logspace(0, -12, 200))
        check(fails, exact, f"{scheme.value}: dark-free floor not exact")

    check(fails, model.BELL_PROJECTION * PARAMS.polarizer_transmission**2 == 1 / 8, "BSM coefficient != 1/8")

    a = np.linspace(0.0, 200.0, 2001)
    trip = max(abs(db_from_transmission(transmission_from_db(x)) - x) for x in a)
    check(fails, trip <= 1e-9, f"dB round trip error {trip:.3g}")
    record(6, "property suite", fails, f"dB round-trip max {trip:.2g}")


def test_criterion_7_determinism(tmp_path):
    fails = []
    sweep_argv = ["sweep", "--scheme", "both", "--from-db", "0", "--to-db", "30", "--step-db", "5",
                  "--mc-pulses", "200000", "--seed", "7"]
    files = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        check(fails, run(sweep_argv + ["--out", str(path)]) == 0, "sweep exit code")
        files.append(path.read_bytes())
    check(fails, files[0] == files[1], "sweep CSVs differ between runs")
    check(fails, files[0] == (GOLDEN / "sweep_mc.csv").read_bytes(), "sweep CSV differs from golden")

    mc_argv = ["mc", "--scheme", "direct", "--atten-db", "10", "--pulses", "1000000", "--seed", "42"]
    outs = [cli(mc_argv)[1] for _ in range(2)]
    check(fails, outs[0] == outs[1], "mc console output differs between runs")
    check(fails, outs[0].encode() == (GOLDEN / "mc_direct.txt").read_bytes(), "mc output differs from golden")
    record(7, "deterministic sweep/mc output", fails)
