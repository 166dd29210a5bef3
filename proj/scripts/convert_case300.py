#!/usr/bin/env python3
"""Convert the MATPOWER/PYPOWER IEEE 300-bus case into the canonical network format.

Usage: convert_case300.py OUT.json   (requires `pip install pypower`)

Conventions:
  * vertex ids are the bus numbers as strings, in case-file order
  * vertex_value is the solved voltage angle Va in radians
  * injection is the net active injection (Pg - Pd) in per unit on a 100 MVA base
  * coeff is the series susceptance 1/|x| in per unit; the single branch with a
    negative reactance (series compensation, 1201-120) is taken by magnitude
  * the two pairs of identical parallel circuits keep separate entries with
    circuit = 2 on the second circuit
"""
import json
import math
import sys

from pypower.case300 import case300


def main(out_path):
    case = case300()
    base = case["baseMVA"]
    bus, gen, branch = case["bus"], case["gen"], case["branch"]

    pgen = {}
    for row in gen:
        pgen[int(row[0])] = pgen.get(int(row[0]), 0.0) + row[1]

    vertices = []
    for row in bus:
        bid = int(row[0])
        vertices.append({
            "id": str(bid),
            "injection": (pgen.get(bid, 0.0) - row[2]) / base,
            "vertex_value": math.radians(row[8]),
        })

    links, seen = [], {}
    for row in branch:
        f, t, x = int(row[0]), int(row[1]), row[3]
        key = (min(f, t), max(f, t))
        seen[key] = seen.get(key, 0) + 1
        link = {"from": str(f), "to": str(t), "coeff": 1.0 / abs(x)}
        if seen[key] > 1:
            link["circuit"] = seen[key]
        links.append(link)

    doc = {"kind": "power_dc", "vertices": vertices, "links": links}
    with open(out_path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
