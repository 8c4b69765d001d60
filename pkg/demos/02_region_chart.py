"""Region labels in the (V0, n0) plane at I = I*.

The transcritical line n0 = n0_star(V0) separates regions I/II from IV/V; the
saddle-node curves leave the pitchfork point. A coarse chart is enough to see
the topology; the acceptance suite runs the full 120 x 120 grid.
"""
from collections import Counter
from pathlib import Path

from mirrorfhn.classify import chart
from mirrorfhn.io import atomic_write, chart_svg

out = Path(__file__).with_name("output")
ch = chart(grid=48, epsilon=0.02)
print("cell counts:", dict(sorted(Counter(ch.labels.ravel()).items())))
print("pitchfork marker at (%.4f, %.4f)" % ch.pitchfork)
atomic_write(out / "chart.svg", chart_svg(ch))
print("wrote", out / "chart.svg")
