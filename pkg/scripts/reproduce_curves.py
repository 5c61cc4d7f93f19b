"""QBER vs total attenuation for direct and relay-assisted distribution.

Writes the curve CSV, prints the 20% (and 11%) crossings, and draws the figure
if matplotlib is available.

    python scripts/reproduce_curves.py --out results/
"""
import argparse
from pathlib import Path

from relayqkd.cli import write_csv
from relayqkd.model import LinkParams, Scheme
from relayqkd.sweep import ONE_WAY_BOUND, TWO_WAY_BOUND, SweepSpec, find_threshold, sweep_curve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--to-db", type=float, default=80.0)
    ap.add_argument("--step-db", type=float, default=0.25)
    ap.add_argument("--mc-pulses", type=int, default=0, help="attach Monte Carlo points (0 = off)")
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    params = LinkParams()
    spec = SweepSpec(
        to_db=args.to_db, step_db=args.step_db,
        include_mc=args.mc_pulses > 0, mc_pulses=max(args.mc_pulses, 1), seed=args.seed,
    )
    rows = sweep_curve(spec, params)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / "qber_curves.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        write_csv(rows, fh, spec.include_mc)
    print(f"wrote {csv_path} ({len(rows)} rows)")

    crossings = {}
    for bound in (TWO_WAY_BOUND, ONE_WAY_BOUND):
        for scheme in Scheme:
            res = find_threshold(scheme, bound, params)
            crossings[scheme, bound] = res
            print(f"{scheme.value:6s} QBER={bound:.2f}: {res.crossing_db:7.3f} dB  {res.crossing_km:7.2f} km")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping figure")
        return

    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme, style in ((Scheme.DIRECT, "--"), (Scheme.RELAY, ":")):
        sub = [r for r in rows if r.scheme is scheme]
        (line,) = ax.plot([r.distance_km for r in sub], [r.qber for r in sub], style, label=scheme.value)
        mc = [r for r in sub if r.mc is not None and r.mc.qber_hat is not None]
        if mc:
            ax.errorbar([r.distance_km for r in mc], [r.mc.qber_hat for r in mc],
                        yerr=[r.mc.stderr for r in mc], fmt=".", ms=3, capsize=2, color=line.get_color())
        ax.axvline(crossings[scheme, TWO_WAY_BOUND].crossing_km, color="0.7", lw=0.8)
    ax.axhline(TWO_WAY_BOUND, color="k", lw=0.8)
    ax.set_xlabel(f"equivalent distance [km] at {params.alpha_db_per_km} dB/km")
    ax.set_ylabel("QBER")
    ax.set_ylim(0, 0.5)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out / "qber_curves.png", dpi=150)
    print(f"wrote {args.out / 'qber_curves.png'}")


if __name__ == "__main__":
    main()
