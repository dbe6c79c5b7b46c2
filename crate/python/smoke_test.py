#!/usr/bin/env python3
"""Smoke test for the qmetro_py extension module.

Builds are expected via either:
  - maturin develop -m crates/py/Cargo.toml
  - cargo build --release -p qmetro-py  (this script then locates the cdylib)

Run: python3 python/smoke_test.py
"""

import math
import os
import shutil
import sys
import tempfile


def _load_module():
    try:
        import qmetro_py  # already installed (e.g. via maturin)

        return qmetro_py
    except ImportError:
        pass
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates = [
        os.path.join(root, "target", "release", "libqmetro_py.so"),
        os.path.join(root, "target", "debug", "libqmetro_py.so"),
        os.path.join(root, "target", "release", "libqmetro_py.dylib"),
        os.path.join(root, "target", "debug", "libqmetro_py.dylib"),
    ]
    for cand in candidates:
        if os.path.exists(cand):
            tmp = tempfile.mkdtemp(prefix="qmetro_py_")
            dest = os.path.join(tmp, "qmetro_py.so")
            shutil.copyfile(cand, dest)
            sys.path.insert(0, tmp)
            import qmetro_py

            return qmetro_py
    raise SystemExit(
        "qmetro_py not found; build it first: cargo build --release -p qmetro-py"
    )


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    qm = _load_module()
    print(f"qmetro_py {qm.version()}")

    # eigendecomposition of Pauli Z
    z = [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-1.0, 0.0)]]
    vals, _vecs = qm.eigh(z)
    approx(vals[0], -1.0)
    approx(vals[1], 1.0)

    # phase-qubit QFIM and CFIM under the Pauli POVM, at a generic angle
    # (at θ ∈ (π/2)·Z two outcomes go dark and the CFI drops discontinuously)
    theta = 0.3
    rho = [
        [(0.5, 0.0), (0.5 * math.cos(theta), -0.5 * math.sin(theta))],
        [(0.5 * math.cos(theta), 0.5 * math.sin(theta)), (0.5, 0.0)],
    ]
    drho = [
        [(0.0, 0.0), (-0.5 * math.sin(theta), -0.5 * math.cos(theta))],
        [(-0.5 * math.sin(theta), 0.5 * math.cos(theta)), (0.0, 0.0)],
    ]
    j = qm.qfim(rho, [drho])
    approx(j[0][0], 1.0)
    povm = qm.pauli_povm_1q()
    assert len(povm) == 6
    i = qm.cfim(rho, [drho], povm)
    approx(i[0][0], 2.0 / 3.0)
    approx(qm.near_optimality_ratio(i, j), 2.0 / 3.0)
    gm, bound, ok = qm.gill_massar(j, i, 2)
    assert ok and gm <= bound + 1e-9

    # the Pauli POVM is an exact 3-design
    assert qm.moment_gap(povm, 2, 3) <= 1e-12

    # SLD of a pure state is twice the derivative
    l = qm.sld(rho, drho)
    for a in range(2):
        for b in range(2):
            approx(l[a][b][0], 2.0 * drho[a][b][0], 1e-8)
            approx(l[a][b][1], 2.0 * drho[a][b][1], 1e-8)

    # deviation observables are locally unbiased: Tr(∂ρ·X) = 1
    xs = qm.deviation_observables(rho, [drho])
    tr = sum(
        drho[a][b][0] * xs[0][b][a][0] - drho[a][b][1] * xs[0][b][a][1]
        for a in range(2)
        for b in range(2)
    )
    approx(tr, 1.0, 1e-6)
    v = qm.predicted_msem(rho, xs, 2)
    approx(v[0][0], 3.0, 1e-6)  # 4(d+1)/(d+2)·J⁻¹ = 3 at d=2, J=1

    # GHZ fidelity table from the reference experiment
    approx(1.0 - qm.ghz_fidelity(3, [0.075] * 3, [0.10] * 3), 0.0073, 0.5e-4)
    psi = qm.ghz_state(3, [0.075] * 3)
    norm = sum(re * re + im * im for re, im in psi)
    approx(norm, 1.0, 1e-12)

    # sampled Clifford gate words parse as tokens
    gates = qm.clifford_sample_gates(3, 12345)
    assert all(g[:1] in ("H", "S", "C") for g in gates)

    # noiseless Hamiltonian QFIM for the maximally entangled input = 4·1
    d = 2
    me = [(0.0, 0.0)] * (d * d)
    me[0] = (1.0 / math.sqrt(d), 0.0)
    me[3] = (1.0 / math.sqrt(d), 0.0)
    jme = qm.qfim_hamiltonian_pure(me, 1)
    for a in range(3):
        for b in range(3):
            approx(jme[a][b], 4.0 if a == b else 0.0, 1e-10)
    # noiseless rates reproduce the same diagonal
    diag = qm.qfim_noisy_bell_diag(1, [1.0, 0.0, 0.0, 0.0])
    for x in diag:
        approx(x, 4.0, 1e-12)

    # end-to-end fidelity estimation on a small dataset
    f_loc, f_std, iters, converged = qm.estimate_fidelity(
        3, [0.075] * 3, [0.10] * 3, 4000, 7
    )
    truth = qm.ghz_fidelity(3, [0.075] * 3, [0.10] * 3)
    assert converged and iters <= 10
    assert abs(f_loc - truth) < 0.02, f"f_loc {f_loc} vs {truth}"
    assert abs(f_std - truth) < 0.2

    print("smoke test OK")


if __name__ == "__main__":
    main()
