"""
Regenerating a figure from the command line
===========================================

The ``cc-tunnel`` command runs a sweep and writes CSV or JSON.  With
``--plot-preset`` it loads a named parameter set and also writes a gnuplot
script next to the data.  This script drives the same entry point from
Python; the shell equivalent is::

    cc-tunnel --plot-preset fig3b --points 200 --output fig3b.csv
    gnuplot fig3b.gp
"""

import csv

from cctunnel.cli import PRESETS, main

print("presets:", ", ".join(PRESETS))

status = main(["--plot-preset", "fig3b", "--points", "200", "--output", "fig3b.csv"])
print("exit status", status)

with open("fig3b.csv", newline="") as fh:
    rows = list(csv.reader(fh))
print("columns:", rows[0])
print("rows:", len(rows) - 1)
print(open("fig3b.gp").read())
