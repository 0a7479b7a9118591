"""
Radio signal over a floor plan
==============================

Build the RSSI raster for one emitter on the bundled office-style map and
look at how walls carve up the signal.
"""

import numpy as np

from hetpatrol.maps import load_world
from hetpatrol.signalmodel import SignalParams, build_signal_map, path_loss, rssi_at, sample_rssi

params = SignalParams()

# One metre of free space at 2.4 GHz costs about 40 dB, so a 20 dBm
# transmitter reads about -20 dBm there. That is the "found" level.
print("loss at 1 m:", round(path_loss(1.0, 0, params), 3), "dB")
print("rssi at 1 m:", round(rssi_at(params, path_loss(1.0, 0, params)), 3), "dBm")
print("each wall adds", path_loss(1.0, 1, params) - path_loss(1.0, 0, params), "dB")

# Load the desk-scale world and its first emitter location.
world, sources = load_world("cumberland")
grid = world.grid
print(f"\nmap {grid.width}x{grid.height} cells at {grid.meters_per_cell} m, source at {sources[0]}")

sm = build_signal_map(grid, sources[0], params)
vals = sm.rssi[~np.isnan(sm.rssi)]
print(f"rssi range {vals.min():.1f} .. {vals.max():.1f} dBm")
print("cells at or above the found threshold:", int((vals >= params.found_threshold).sum()))

# A coarse text rendering: every 3rd cell, darker characters mean stronger signal.
shades = " .:-=+*#%@"
lo, hi = -90.0, -10.0
for r in range(0, grid.height, 3):
    line = ""
    for c in range(0, grid.width, 2):
        v = sm.rssi[r, c]
        if np.isnan(v):
            line += "X"
        else:
            line += shades[int(np.clip((v - lo) / (hi - lo), 0, 0.999) * len(shades))]
    print(line)

# Patrol routes stay out of the found zone: a team that only patrols never
# stumbles on the emitter.
best = max(sample_rssi(sm, p) or -np.inf
           for a in world.graph.node_ids for b in world.graph.neighbors(a) for p in world.edge_route(a, b))
print(f"\nstrongest reading anywhere on a patrol route: {best:.2f} dBm")
