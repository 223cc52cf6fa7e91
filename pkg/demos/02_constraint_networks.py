"""Reasoning over a small network of regions.

A city, a park inside it, a lake inside the park and a road that touches
the lake. Algebraic closure propagates what follows; scenario search picks
one concrete relation per pair.

    python3 demos/02_constraint_networks.py
"""

from rcc8 import (BaseRelation as R, ConstraintNetwork, RelationSet, algebraic_closure,
                  refine_to_scenario)

net = ConstraintNetwork(["city", "park", "lake", "road"])
net = net.add_constraint("park", "city", RelationSet.of(R.NTPP))
net = net.add_constraint("lake", "park", RelationSet.of(R.TPP, R.NTPP))
net = net.add_constraint("road", "lake", RelationSet.of(R.EC))

print("as stated:")
print(net.render())

closed = algebraic_closure(net)
print("\nafter closure:")
print(closed.render())
# The lake is now known to sit strictly inside the city.
print("\nlake vs city:", closed["lake", "city"])

scenario = refine_to_scenario(net)
print("\none consistent scenario:")
for (x, y), r in scenario.items():
    print(f"  {r.name}({x},{y})")

# Adding a contradiction empties an entry during closure.
bad = net.add_constraint("lake", "city", RelationSet.of(R.DC, R.EC))
print("\nlake DC/EC city ->", "inconsistent" if algebraic_closure(bad) is None else "consistent")
