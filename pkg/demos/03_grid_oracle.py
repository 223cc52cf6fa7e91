"""Checking the composition table against concrete regions.

Regions are sets of cells on a small grid. Two regions are connected when
their closed squares touch (8-adjacency), and a part is tangential when it
touches the outside of the whole. On this model the table can be tested
empirically: every sampled triple must respect it, and every entry the
table allows should have a witness.

    python3 demos/03_grid_oracle.py
"""

import json

from rcc8 import BaseRelation as R, default_table, load_composition_table
from rcc8.oracle import GridRegion, classify, soundness_sample, witness_search

x = GridRegion.block(0, 0, 2, 2)
y = GridRegion.block(2, 0, 2, 2)
z = GridRegion.block(0, 0, 5, 5)
print("x:")
print(x.render(6, 6))
print("y:")
print(y.render(6, 6))
print("classify(x, y) =", classify(x, y).name)  # squares share an edge
print("classify(x, z) =", classify(x, z).name)  # corner of the big block
print()

# Soundness: no sampled triple may contradict the table.
bad = soundness_sample(default_table(), n=20_000, seed=1)
print(f"soundness: {len(bad)} violations in 20000 sampled triples")

# A table that still obeys the algebraic laws but claims two regions
# disconnected from a third can never overlap is caught by the samples.
doc = default_table().to_document()
doc["DC|DC"] = [n for n in doc["DC|DC"] if n != "PO"]
bad = soundness_sample(load_composition_table(doc), n=20_000, seed=1)
print(f"corrupted DC|DC: {len(bad)} violations, e.g.")
print(json.dumps(bad[0].to_json()))
print()

# Completeness, one entry at a time: EC ; NTPP can yield PO.
w = witness_search(R.EC, R.NTPP, R.PO, seed=3)
print("witness for EC ; NTPP -> PO")
for name, g in zip("xyz", (w.x, w.y, w.z)):
    print(f"{name}:")
    print(g.render(6, 6))
