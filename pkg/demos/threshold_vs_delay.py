"""How much staleness costs: the largest stable step size versus delay.

Sweeps the gradient delay tau for a unit-curvature quadratic, computes the
stability threshold eta* two independent ways (root bisection and the closed
form 2*sin(pi/(4*tau+2))), and fits a line to 1/eta*.  The reciprocal grows
linearly with slope close to 2/pi, so doubling the delay roughly halves the
usable step size.

Writes threshold_vs_delay.csv and threshold_vs_delay.svg next to --out.
"""

import argparse
import math
from pathlib import Path

from staleness_lab import analytic_threshold_plain, numeric_threshold, threshold_curve
from staleness_lab.svgchart import write_chart


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("demo_out"))
    ap.add_argument("--max-tau", type=int, default=32)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    taus = list(range(args.max_tau + 1))
    print(f"{'tau':>4}  {'eta* (roots)':>14}  {'eta* (closed)':>14}  {'abs diff':>10}")
    worst = 0.0
    for tau in taus:
        numeric = numeric_threshold("plain", 1.0, tau).eta_star
        closed = analytic_threshold_plain(1.0, tau)
        worst = max(worst, abs(numeric - closed))
        if tau <= 8 or tau % 8 == 0:
            print(f"{tau:>4}  {numeric:>14.10f}  {closed:>14.10f}  {abs(numeric - closed):>10.2e}")
    print(f"\nlargest disagreement over tau 0..{args.max_tau}: {worst:.2e}")

    curve = threshold_curve("plain", 1.0, taus, rel_tol=1e-8)
    print(f"fit of 1/eta* against tau: slope {curve.slope:.6f}"
          f" (2/pi = {2 / math.pi:.6f}), R^2 = {curve.r_squared:.8f}")

    curve.write_csv(args.out / "threshold_vs_delay.csv")
    rows = [(float(r.x), r.inv_a_eta) for r in curve.rows if r.result is not None]
    write_chart(
        args.out / "threshold_vs_delay.svg",
        ["tau", "1/eta*"],
        rows,
        title="reciprocal threshold grows linearly with delay",
        y_label="1 / eta*",
    )
    print(f"wrote {args.out}/threshold_vs_delay.csv and .svg")


if __name__ == "__main__":
    main()
