"""
Hierarchies, summing matrices and coherence
===========================================

A hierarchy is described by its bottom series and by aggregates that sum
other nodes. The summing matrix ``S = [A; I]`` maps bottom values to every
series, uppers first.
"""

import numpy as np

from probrecon import HierarchySpec, aggregate_bottom, build_summing_matrix, check_coherence

# %%
# The seven-series tree: Total = R1 + R2, R1 = R11 + R12, R2 = R21 + R22.
spec = HierarchySpec(
    ("R11", "R12", "R21", "R22"),
    (("Total", ("R1", "R2")), ("R1", ("R11", "R12")), ("R2", ("R21", "R22"))),
)
summing = build_summing_matrix(spec)
print("series order:", summing.names)
print(summing.S.astype(int))

# %%
# Aggregating bottom observations always yields a coherent panel.
bottoms = np.array([[1.0, 2.0, 3.0, 4.0], [0.5, 0.5, 0.5, 0.5]])
panel = aggregate_bottom(bottoms, summing)
print(panel.values)
print("coherent:", check_coherence(panel, summing))

# %%
# Independently produced forecasts usually are not.
forecasts = panel.values[0] + np.array([0.4, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0])
ok, violation = check_coherence(forecasts, summing)
print(f"coherent: {ok}, largest violation {violation:.2f}")

# %%
# Grouped structures are just extra aggregate rows over any subset of bottoms.
grouped = build_summing_matrix(
    HierarchySpec(
        ("AX", "AY", "BX", "BY"),
        (("Total", ("AX", "AY", "BX", "BY")), ("A", ("AX", "AY")), ("B", ("BX", "BY")),
         ("X", ("AX", "BX")), ("Y", ("AY", "BY"))),
    )
)
print(grouped.A.astype(int))
