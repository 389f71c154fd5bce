"""Single simulate -> reconstruct -> evaluate run with a convergence summary."""

import argparse

import numpy as np

from kennedy_tomo.detector import DetectorModel, default_probe_ensemble, simulate_frequency_table
from kennedy_tomo.metrics import discrimination_error, povm_fidelity, reference_povm
from kennedy_tomo.receivers import kennedy_error
from kennedy_tomo.tomography import MlConfig, ml_reconstruct, truncate_povm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=-0.70)
    ap.add_argument("--shots", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--visibility", type=float, default=1.0)
    ap.add_argument("--dark-prob", type=float, default=0.0)
    ap.add_argument("--plain", action="store_true", help="disable the extrapolated steps")
    args = ap.parse_args()

    model = DetectorModel(args.beta, args.visibility, args.dark_prob)
    ens = default_probe_ensemble(args.dim, shots=args.shots, seed=args.seed)
    table = simulate_frequency_table(model, ens)
    povm, report = ml_reconstruct(ens, table, MlConfig(extrapolate=not args.plain))
    qubit = truncate_povm(povm, 2)
    disc = discrimination_error(qubit, args.beta)
    fid = povm_fidelity(qubit, reference_povm(args.beta))

    np.set_printoptions(precision=5, suppress=True)
    print(f"iterations {report.iterations_run} (extrapolated {report.extrapolated_steps}, damped {report.damped_steps}),"
          f" converged={report.converged}")
    print(f"log-likelihood {report.final_log_likelihood:.4f}, constraint violation {report.max_constraint_violation:.1e}")
    print("reconstructed Pi_+ (qubit block):")
    print(qubit["+"])
    print("ideal Pi_+ (qubit block):")
    print(reference_povm(args.beta)["+"])
    print(f"p_error {disc.p_error:.5f} (ideal {kennedy_error(args.beta):.5f}); F+ {fid.f_plus:.6f}, F- {fid.f_minus:.6f}")


if __name__ == "__main__":
    main()
