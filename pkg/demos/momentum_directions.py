"""Two momentum placements, opposite effects on the stability threshold.

With stale gradients the position of the momentum update matters.  Classic
heavy ball (velocity folded into the iterate every step) shrinks the stable
step-size range as m grows.  Applying the velocity correction at the stale
read point instead widens it.  Same delay, same curvature, opposite trends.
"""

from staleness_lab import DelayModel, numeric_threshold

TAU = 16
MS = [0.0, 0.3, 0.5, 0.7, 0.9]


def main() -> None:
    delay = DelayModel.constant(TAU)
    print(f"stability threshold eta* at tau = {TAU}, a = 1\n")
    print(f"{'m':>5}  {'heavy ball':>12}  {'shifted':>12}")
    for m in MS:
        mom = numeric_threshold("momentum", 1.0, delay, m=m).eta_star
        shf = numeric_threshold("shifted", 1.0, delay, m=m).eta_star
        print(f"{m:>5.2f}  {mom:>12.8f}  {shf:>12.8f}")

    print("\nheavy ball: more momentum, smaller stable region.")
    print("shifted:    more momentum, larger stable region.")


if __name__ == "__main__":
    main()
