"""RMS of the squared-return decomposition residuals against sub-step count, per scheme.

The adapted residual should shrink like m^(-1/2); the look-ahead residual mean
should stay near -2 theta delta whatever the resolution.

    python scripts/scheme_convergence.py --paths 20000
"""

import argparse
from dataclasses import replace

from hestonlab import HestonParams, Scheme, SimConfig
from hestonlab.verification import convergence_study, ito_residual_correct, ito_residual_incorrect


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--substeps", default="4,16,64,256")
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    params = HestonParams(kappa=2.0, theta=0.04, sigma=0.3, rho=-0.7)
    ms = [int(m) for m in args.substeps.split(",")]
    base = SimConfig(delta=1 / 12, horizon=3, n_paths=args.paths, seed=args.seed)
    print("scheme,check,substeps,mean,rms,z")
    for scheme in Scheme:
        cfg = replace(base, scheme=scheme)
        for check in (ito_residual_correct, ito_residual_incorrect):
            for r in convergence_study(params, cfg, ms, check):
                print(f"{scheme.value},{r.check_name},{r.substeps},{r.mean_residual!r},{r.rms_residual!r},{r.z:.3f}")


if __name__ == "__main__":
    main()
