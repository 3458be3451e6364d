"""Single-photon-level delay HOM between the two memories.

Each memory stores <n> = 1.6 input pulses and delivers ~0.0016 photons
per pulse to the beamsplitter, with a signal-to-background ratio near
2.6.  The per-memory histograms make the background floor visible; the
delay scan shows the reduced dip the background leaves behind.

At the paper's photon flux, desk-scale trigger counts leave the
per-point coincidences sparse, so this demo boosts statistics by running
more triggers per point than the preset default and still fits the dip
from only thousands of coincidences.
"""

from dataclasses import replace
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from homsim import fit_gaussian_dip, load_preset, run_scan, visibility_vs_sbr
from homsim.analysis import estimate_sbr, normalized_rate_sigma
from homsim.engine import CycleModel, collect_stream
from homsim.runner import _background_roi, overlap_visibility
from homsim.timetags import fold_histogram

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# The experiment accumulated ~2.9e9 triggers over 20 hours; matching its
# ~0.001 detected photons per pulse at desk scale would leave only tens
# of coincidences per point.  Raising the fiber coupling 5x leaves the
# SBR and the visibility law untouched (the background scales with the
# signal) and brings the per-point coincidences to a fittable level at
# 2e7 triggers.
scenario = load_preset("fig5-delay")
scenario = replace(
    scenario,
    memory_a=replace(scenario.memory_a,
                     transmission=5 * scenario.memory_a.transmission),
    memory_b=replace(scenario.memory_b,
                     transmission=5 * scenario.memory_b.transmission),
    n_triggers=20_000_000,
    triggers_per_trial=1_000_000,
)

# --- per-memory histograms at zero delay ----------------------------------

model = CycleModel(scenario, None)
stream = collect_stream(scenario, None, model=model, max_workers=4)
fig, axes = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
for ch, ax in zip((0, 1), axes):
    hist = fold_histogram(stream, channel=ch, bin_ns=50.0)
    ax.step(hist.centers_ns, hist.counts, where="mid")
    for a, b in model.roi.windows:
        ax.axvspan(a, b, alpha=0.2, color="tab:orange")
    ax.set_ylabel(f"detector {ch + 1} counts")
axes[1].set_xlabel("time in cycle (ns)")
axes[0].set_title("leakage, retrieved pulse and flat background (ROI shaded)")
fig.tight_layout()
fig.savefig(OUT / "03_histograms.png", dpi=150)

sbr = estimate_sbr(fold_histogram(stream, 0, 50.0), model.roi, _background_roi(model))
print(f"SBR estimated from the histogram: {sbr:.2f} (configured "
      f"{scenario.noise_a.sbr})")

# --- delay scan ------------------------------------------------------------

curve = run_scan(scenario, mode="both", max_workers=4)
fit = fit_gaussian_dip([(p.value, p.counts) for p in curve.points])
v = fit.params["visibility"]
v_pred = visibility_vs_sbr(overlap_visibility(scenario), scenario.noise_a.sbr)
print(f"fitted visibility: {v:.3f} +- {fit.sigmas['visibility']:.3f} "
      f"(background law predicts {v_pred:.3f})")

fig2, ax = plt.subplots(figsize=(7, 4.5))
ax.errorbar(curve.values(), curve.measured_g(),
            yerr=[normalized_rate_sigma(p.counts) for p in curve.points],
            fmt="o", ms=4, label="Monte Carlo")
ax.plot(curve.values(), curve.analytic_g(), "-", label="analytic")
ax.set_xlabel("retrieval delay (ns)")
ax.set_ylabel("normalized coincidences")
ax.set_title("single-photon-level memories: background-limited dip")
ax.legend()
fig2.tight_layout()
fig2.savefig(OUT / "03_delay_scan.png", dpi=150)
print(f"figures -> {OUT / '03_histograms.png'}, {OUT / '03_delay_scan.png'}")
