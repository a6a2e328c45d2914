"""Finite-size scaling of the soft-mode fluctuations and their algebra.

At criticality the gap closes with volume as Delta ~ V^-gamma under a field
h = hhat/V^alpha, with gamma read off a log-log fit.  The Q and P variances
of the rescaled soft-mode pair then fix delta_Q and delta_P, and the sum
delta_Q + delta_P decides what happens to the canonical commutator of the
rescaled pair:

  thermal critical line: fluctuations are classical, delta_P = 0,
      the commutator dies             -> abelian pair
  quantum critical point (0, lambda_c): squeezing is symmetric,
      delta_Q = -delta_P, the commutator survives -> non-abelian pair

A short volume ladder (2^10 .. 2^18) is enough to see all of this; the
acceptance suite runs the full 2^12 .. 2^22 ladders.
"""

from condlab import ScpParams, below_line_point, gap_exponent_scan, \
    operating_point

VOLUMES = [2**k for k in range(10, 19)]


def show(scan):
    print(f"  sigma={scan.params.sigma:<5.3g} alpha={scan.alpha:<4.2g} "
          f"gamma {scan.gamma.exponent:6.3f} (pred {scan.prediction.gamma:6.3f}) "
          f"dQ {scan.delta_Q[0]:+6.3f} dP {scan.delta_P[0]:+6.3f} "
          f"-> {scan.algebra}")


def main():
    print("thermal critical line (lambda = lambda_c/2, T = T_c):")
    for sigma, alpha in ((0.4, 0.5), (0.4, 1.0), (0.8, 0.5), (0.8, 1.2)):
        params = ScpParams(sigma=sigma)
        show(gap_exponent_scan("critical-line", params, alpha,
                               volumes=VOLUMES, fit_window=5))

    print("\nquantum critical point (lambda = lambda_c, T = 0):")
    for sigma, alpha in ((0.5, 0.5), (0.5, 1.5), (1.0, 0.5), (1.0, 2.0)):
        params = ScpParams(sigma=sigma)
        show(gap_exponent_scan("quantum", params, alpha,
                               volumes=VOLUMES, fit_window=5))

    print("\nbelow the line (sigma = 0.4, hhat = 0.1): the field scaling "
          "decides the state")
    params = ScpParams(sigma=0.4)
    lam, T = operating_point("below", params)
    for alpha in (0.5, 1.0, 2.0):
        rep = below_line_point(params, alpha, volumes=VOLUMES, lam=lam, T=T)
        extra = ""
        if rep.w_predicted is not None:
            extra = (f"  [w fit {rep.w_estimate.value:.4f} vs root "
                     f"{rep.w_predicted:.4f}]")
        print(f"  alpha={alpha:<4.2g} <Q> -> {rep.Q_limit.value:9.6f} "
              f"(predicted {rep.Q_predicted:9.6f}){extra}")
    print("  alpha < 1: full order sqrt(rho); alpha = 1: mixed state "
          "hhat/w; alpha > 1: symmetry restored")


if __name__ == "__main__":
    main()
