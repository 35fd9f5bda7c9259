#!/usr/bin/env python3
"""Print the Area(Re P_N > 0)/pi table and the log N product for a list of N.

    python scripts/extremal_table.py 16 32 64
"""
import math
import sys

from nodal_lab.extremal import ExtremalConfig, ExtremalContext, build_extremal, extremal_area

ctx = ExtremalContext(ExtremalConfig())
print("N  r_N  area/pi  abs_error  area/pi*logN")
for N in map(int, sys.argv[1:] or ["16", "32", "64"]):
    P = build_extremal(N, context=ctx)
    a = extremal_area(P, 0.0, 100_000)
    print(f"{N}  {P.r_N:.6f}  {a.value / math.pi:.6f}  {a.abs_error / math.pi:.2e}  {a.value / math.pi * math.log(N):.6f}")
