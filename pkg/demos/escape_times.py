"""Life just past the boundary: how long until a run visibly blows up.

Barely unstable runs linger.  At 2 percent past the threshold the iterate
needs thousands of steps to grow by a factor of a million; at double the
threshold it takes about a hundred.  The escape step falls off roughly like
1/log(growth factor), so "it has not diverged yet" is weak evidence of
stability when eta sits near the edge.
"""

from pathlib import Path

from staleness_lab import QuadraticProblem, analytic_threshold_plain, escape_time_curve
from staleness_lab.svgchart import write_chart

TAU = 4
FRACTIONS = [1.02, 1.05, 1.1, 1.2, 1.5, 2.0]


def main() -> None:
    out = Path("demo_out")
    out.mkdir(parents=True, exist_ok=True)

    eta_star = analytic_threshold_plain(1.0, TAU)
    problem = QuadraticProblem.diagonal([1.0])
    etas = [f * eta_star for f in FRACTIONS]
    curve = escape_time_curve(problem, "plain", TAU, etas, max_steps=200_000)

    print(f"tau = {TAU}, threshold eta* = {eta_star:.6f}")
    print(f"{'eta/eta*':>9}  {'escape step':>12}")
    for (eta, step), frac in zip(curve.rows, FRACTIONS):
        print(f"{frac:>9.2f}  {step if step is not None else 'never':>12}")

    curve.write_csv(out / "escape_times.csv")
    rows = [(f, float(s)) for (e, s), f in zip(curve.rows, FRACTIONS) if s is not None]
    write_chart(out / "escape_times.svg", ["eta/eta*", "escape step"], rows,
                title="steps to 1e6 amplification past the threshold")
    print(f"wrote {out}/escape_times.csv and .svg")


if __name__ == "__main__":
    main()
