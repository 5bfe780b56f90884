"""How boundary-visible perturbations scale with inclusion contrast.

Runs two quick sweeps on a coarse mesh: softening an aluminium-like
inclusion toward a cavity, and stiffening it toward a rigid body. Both
distances follow clean power laws in the contrast; the script prints the
fitted slopes and writes the sweep artifacts next to this file.
"""

from pathlib import Path

from elascloak import run_contrast_sweep

OUT = Path(__file__).resolve().parent / "artifacts" / "contrast"


def sweep(direction):
    res = run_contrast_sweep(direction=direction, h=0.5,
                             eta_list=None, workers=2,
                             out_dir=str(OUT / direction))
    print(f"{direction} sweep (disk inclusion, steel background):")
    for (eta, dist), ok in zip(res.pairs, res.converged):
        mark = "converged" if ok else "pre-asymptotic"
        print(f"  eta={eta:8.0e}  distance={dist:.6f} m  [{mark}]")
    print(f"  fitted slope {res.slope:+.4f}   r^2 {res.r_squared:.6f}")
    print(f"  prefactor {res.prefactor:.4f}  runtime {res.runtime:.1f}s")
    print(f"  artifacts in {OUT / direction}\n")
    return res


if __name__ == "__main__":
    soft = sweep("soft")
    hard = sweep("hard")
    print("softening decays linearly in the contrast, stiffening decays")
    print("like one over the contrast; the two prefactors nearly agree:")
    print(f"  {soft.prefactor:.3f} (soft) vs {hard.prefactor:.3f} (hard)")
