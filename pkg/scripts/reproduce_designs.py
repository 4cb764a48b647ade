"""Synthesize both fourth-order designs, compare with the three-decimal
reference matrix, and write matrices, sweeps and band reports to an output directory."""

import argparse
import json
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from xcoupler.designs import PLANS, TZ_HZ, design_matrix, rounded_m1
from xcoupler.extraction import band_metrics, qext_from_matrix, with_spurious_band
from xcoupler.iofmt import report_json, write_csv, write_matrix_json
from xcoupler.response import network_response, normalized_frequency, sparams, denormalize_tz


def zero_of(m, plan, guess_hz):
    om = normalized_frequency(plan, guess_hz)
    res = minimize_scalar(lambda w: abs(network_response(m.values, np.array([w]))[1][0]),
                          bounds=(om - 0.1, om + 0.1), method="bounded", options={"xatol": 1e-10})
    return denormalize_tz(plan, res.x)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/designs")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(1.5e9, 7.0e9, 11001)

    for d, plan in PLANS.items():
        m = design_matrix(d)
        (out / f"design{d}.json").write_text(write_matrix_json(m, plan))
        sweep = sparams(m, plan, grid)
        (out / f"design{d}.csv").write_text(write_csv(sweep))
        bm = band_metrics(with_spurious_band(sweep, 6e9), plan, edge_rl_db=20.0)
        (out / f"design{d}_band.json").write_text(report_json(bm))
        print(f"design {d}: f0={plan.f0 / 1e9} GHz bw={plan.bw / 1e9} GHz FBW={100 * plan.fbw:.3f}%")
        print(np.array2string(m.values, precision=5, suppress_small=True))
        print(f"  Q_ext={qext_from_matrix(plan, m.values[0, 1]):.4f}  zero at {zero_of(m, plan, TZ_HZ[d]) / 1e9:.5f} GHz")
        print(f"  band: {bm.f_lo / 1e9:.4f}-{bm.f_hi / 1e9:.4f} GHz, RL {bm.rl_min_db:.2f} dB, "
              f"spur {bm.f_spur / 1e9:.4f} GHz, SFR {bm.sfr_hz / 1e9:.4f} GHz ({bm.sfr_pct:.2f}%)")

    plan = PLANS[1]
    pm = rounded_m1()
    s = sparams(pm, plan, grid)
    lo, hi = plan.band_edges()
    band = (grid >= lo) & (grid <= hi)
    summary = {
        "rounded_zero_hz": zero_of(pm, plan, TZ_HZ[1]),
        "rounded_s21_at_4p15_db": float(20 * np.log10(abs(sparams(pm, plan, np.array([4.15e9])).s21[0]))),
        "rounded_max_inband_s11_db": float(np.max(20 * np.log10(np.abs(s.s11[band])))),
        "max_entry_difference": float(np.max(np.abs(pm.values - design_matrix(1).values))),
    }
    (out / "rounded_vs_synthesized.json").write_text(json.dumps(summary, indent=2) + "\n")
    print("three-decimal reference matrix:", json.dumps(summary))


if __name__ == "__main__":
    main()
