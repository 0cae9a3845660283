# %% [markdown]
# # Partial-state observers: only the attitude is measured
#
# The plant is R' = R w, w' = u.  The observers reconstruct both R and w
# from noisy attitude measurements.  The sweep runs both observers at three
# noise levels and writes a plot script with one row per noise level.

# %%
import tempfile
from pathlib import Path

from lieobs.experiment import emit_plot_script, run_scenario

with tempfile.TemporaryDirectory() as out:
    m = run_scenario("fig4-lpso-sweep", out_dir=out, t_end=2.0)
    for r in m.runs:
        print(f"{r.scenario}: ||R_hat - R|| at t=2 = {r.terminal_error:.4f}")
    script = emit_plot_script(m)
    print(Path(script).read_text().splitlines()[0])
