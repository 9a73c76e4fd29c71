"""Writes the CityFlow-format fixtures used by the tests.

grid_1x1_roadnet.json  one 4-way intersection, 3 lanes per approach (L/S/R)
grid_3x4_roadnet.json  12 signalized intersections (same shape as the Jinan network)
grid_1x1_flow.json     a few explicit-route flows on the 1x1 network
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
SPACING = 300.0
SPEED = 11.111


def node(r, c):
    return f"intersection_{r}_{c}"


def road(a, b):
    return f"road_{a[0]}_{a[1]}_{b[0]}_{b[1]}"


def build(rows, cols, with_phases=True):
    nodes = {}
    for r in range(0, rows + 2):
        for c in range(0, cols + 2):
            inner = 1 <= r <= rows and 1 <= c <= cols
            edge = (r in (0, rows + 1)) != (c in (0, cols + 1))
            if inner or edge:
                nodes[(r, c)] = inner
    roads = []
    for (r, c), inner in nodes.items():
        if not inner:
            continue
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            n = (r + dr, c + dc)
            for a, b in ((n, (r, c)), ((r, c), n)):
                name = road(a, b)
                if any(x["id"] == name for x in roads):
                    continue
                pa = {"x": a[1] * SPACING, "y": (rows + 1 - a[0]) * SPACING}
                pb = {"x": b[1] * SPACING, "y": (rows + 1 - b[0]) * SPACING}
                roads.append({
                    "id": name,
                    "points": [pa, pb],
                    "lanes": [{"width": 3.2, "maxSpeed": SPEED} for _ in range(3)],
                    "startIntersection": node(*a),
                    "endIntersection": node(*b),
                })
    # heading vectors: (dr, dc) of travel
    left_of = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}
    right_of = {v: k for k, v in left_of.items()}
    inters = []
    for (r, c), inner in sorted(nodes.items()):
        entry = {
            "id": node(r, c),
            "point": {"x": c * SPACING, "y": (rows + 1 - r) * SPACING},
            "width": 10.0 if inner else 0.0,
            "virtual": not inner,
            "roads": [x["id"] for x in roads if node(r, c) in (x["startIntersection"], x["endIntersection"])],
        }
        if inner:
            links = []
            for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
                src = (r + dr, c + dc)
                heading = (-dr, -dc)
                for turn, lane, h in (("turn_left", 0, left_of[heading]), ("go_straight", 1, heading),
                                      ("turn_right", 2, right_of[heading])):
                    dst = (r + h[0], c + h[1])
                    links.append({
                        "type": turn,
                        "startRoad": road(src, (r, c)),
                        "endRoad": road((r, c), dst),
                        "direction": 0,
                        "laneLinks": [{"startLaneIndex": lane, "endLaneIndex": k, "points": []} for k in range(3)],
                    })
            entry["roadLinks"] = links
            if with_phases:
                idx = {(l["startRoad"], l["type"]): i for i, l in enumerate(links)}
                def link(side, turn):
                    src = (r + side[0], c + side[1])
                    return idx[(road(src, (r, c)), turn)]
                N, E, S, W = (-1, 0), (0, 1), (1, 0), (0, -1)
                rights = [i for i, l in enumerate(links) if l["type"] == "turn_right"]
                pairs = [(link(W, "go_straight"), link(E, "go_straight")),
                         (link(N, "go_straight"), link(S, "go_straight")),
                         (link(W, "turn_left"), link(E, "turn_left")),
                         (link(N, "turn_left"), link(S, "turn_left")),
                         (link(W, "go_straight"), link(W, "turn_left")),
                         (link(E, "go_straight"), link(E, "turn_left")),
                         (link(S, "go_straight"), link(S, "turn_left")),
                         (link(N, "go_straight"), link(N, "turn_left"))]
                phases = [{"time": 5, "availableRoadLinks": rights}]
                phases += [{"time": 30, "availableRoadLinks": list(p) + rights} for p in pairs]
                entry["trafficLight"] = {"roadLinkIndices": list(range(len(links))), "lightphases": phases}
        else:
            entry["roadLinks"] = []
        inters.append(entry)
    return {"intersections": inters, "roads": roads}


def vehicle():
    return {"length": 5.0, "width": 2.0, "maxPosAcc": 2.0, "maxNegAcc": 4.5, "usualPosAcc": 2.0,
            "usualNegAcc": 4.5, "minGap": 2.5, "maxSpeed": SPEED, "headwayTime": 1.5}


def main():
    with open(os.path.join(HERE, "grid_1x1_roadnet.json"), "w") as f:
        json.dump(build(1, 1), f, indent=1)
    with open(os.path.join(HERE, "grid_3x4_roadnet.json"), "w") as f:
        json.dump(build(3, 4), f, indent=1)
    flows = [
        {"vehicle": vehicle(), "route": ["road_0_1_1_1", "road_1_1_2_1"], "interval": 6.0, "startTime": 0, "endTime": 3600},
        {"vehicle": vehicle(), "route": ["road_1_0_1_1", "road_1_1_1_2"], "interval": 8.0, "startTime": 0, "endTime": 3600},
        {"vehicle": vehicle(), "route": ["road_1_2_1_1", "road_1_1_2_1"], "interval": 20.0, "startTime": 0, "endTime": 3600},
        {"vehicle": vehicle(), "route": ["road_2_1_1_1", "road_1_1_1_2"], "interval": 30.0, "startTime": 0, "endTime": 3600},
    ]
    with open(os.path.join(HERE, "grid_1x1_flow.json"), "w") as f:
        json.dump(flows, f, indent=1)


if __name__ == "__main__":
    main()
