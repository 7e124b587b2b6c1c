"""Regenerate the bundled scenario CSVs under src/ueassoc/data/."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ueassoc.io import save_route, save_stations
from ueassoc.mobility import RoutePoint
from ueassoc.model import BaseStation, avg_handover_all

DATA = Path(__file__).resolve().parents[1] / "src" / "ueassoc" / "data"
REGION = (1947.65, 1878.95)
N_STATIONS = 26
N_POINTS = 432


def corridor():
    # both stations reach the whole corridor, so every point stays within [-12, -5] dB
    stations = [BaseStation(0, (0.0, 0.0), 1000.0, math.inf, 0.5),
                BaseStation(1, (1000.0, 0.0), 1000.0, math.inf, 0.5)]
    route = [RoutePoint(float(k), (10.0 * k, 0.0)) for k in range(101)]
    save_stations(DATA / "corridor_stations.csv", stations, "# corridor: 2 stations, 1 km straight route")
    save_route(DATA / "corridor_route.csv", route, "# corridor: x from 0 to 1000 m in 10 m steps")


def polyline(waypoints, n):
    pts = np.asarray(waypoints, dtype=np.float64)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, s[-1], n)
    return np.column_stack([np.interp(targets, s, pts[:, 0]), np.interp(targets, s, pts[:, 1])])


def region26(seed=2023):
    rng = np.random.default_rng(seed)
    w, h = REGION
    xy = rng.uniform((0.0, 0.0), (w, h), size=(N_STATIONS, 2))
    hm = rng.uniform(0.0, 1.0, size=(N_STATIONS, N_STATIONS))
    np.fill_diagonal(hm, 0.0)
    hbar = avg_handover_all(hm)
    stations = [BaseStation(i, (round(float(x), 2), round(float(y), 2)), 500.0, 100.0, float(hbar[i]))
                for i, (x, y) in enumerate(xy)]
    # street-grid style route: axis-aligned legs across the region
    waypoints = [(120.0, 1700.0), (120.0, 1150.0), (700.0, 1150.0), (700.0, 420.0),
                 (1300.0, 420.0), (1300.0, 980.0), (1820.0, 980.0), (1820.0, 160.0)]
    xy_route = polyline(waypoints, N_POINTS)
    route = [RoutePoint(float(k), (round(float(x), 3), round(float(y), 3))) for k, (x, y) in enumerate(xy_route)]
    save_stations(DATA / "region26_stations.csv", stations,
                  f"# region26: {N_STATIONS} stations in {w} x {h} m, seed={seed}")
    save_route(DATA / "region26_route.csv", route, f"# region26: {N_POINTS} points")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    corridor()
    region26()
