#!/usr/bin/env python3
"""Regenerates the scenario presets in scenarios/ from fixed seeds."""
import json
import math
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "scenarios"
GROUND = {"type": "plane", "point": [0, 0, 0], "normal": [0, 0, 1], "tag": "ground"}
SENSOR = {"rings": 16, "elev_min": -15, "elev_max": 15, "azimuth_steps": 900,
          "max_range": 80, "range_noise": 0.01}


def box(x, y, sx, sy, h, yaw=0.0, tag="building", z0=0.0):
    return {"type": "box", "center": [round(x, 3), round(y, 3), round(z0 + h / 2, 3)],
            "yaw": round(yaw, 2), "size": [round(sx, 3), round(sy, 3), round(h, 3)], "tag": tag}


def cyl(x, y, r, h, tag="tree"):
    return {"type": "cylinder", "center": [round(x, 3), round(y, 3), round(h / 2, 3)],
            "radius": round(r, 3), "height": round(h, 3), "tag": tag}


def ring_of(rng, cx, cy, rmin, rmax, count, make):
    out = []
    for i in range(count):
        a = 2 * math.pi * (i + rng.uniform(-0.25, 0.25)) / count
        r = rng.uniform(rmin, rmax)
        out.append(make(cx + r * math.cos(a), cy + r * math.sin(a), a))
    return out


def campus_world(rng, cx=0.0, cy=20.0):
    w = [GROUND]
    w += ring_of(rng, cx, cy, 9.0, 11.0, 7, lambda x, y, a: box(
        x, y, rng.uniform(4, 6), rng.uniform(3, 5), rng.uniform(6, 10), math.degrees(a) + rng.uniform(-20, 20)))
    w += ring_of(rng, cx, cy, 31.0, 36.0, 12, lambda x, y, a: box(
        x, y, rng.uniform(6, 10), rng.uniform(5, 8), rng.uniform(8, 14), math.degrees(a) + rng.uniform(-15, 15)))
    w += ring_of(rng, cx, cy, 24.5, 26.0, 18, lambda x, y, a: cyl(x, y, rng.uniform(0.25, 0.5), rng.uniform(4, 7)))
    w += ring_of(rng, cx, cy, 14.5, 15.5, 10, lambda x, y, a: cyl(x, y, 0.15, 5.0, "pole"))
    return w


def write(name, data):
    lines = ["{"]
    items = list(data.items())
    for i, (k, v) in enumerate(items):
        sep = "," if i + 1 < len(items) else ""
        if isinstance(v, list) and v and isinstance(v[0], dict):
            body = ",\n".join("  " + json.dumps(x) for x in v)
            lines.append(f' "{k}": [\n{body}\n ]{sep}')
        else:
            lines.append(f' "{k}": {json.dumps(v)}{sep}')
    lines.append("}")
    (OUT / f"{name}.json").write_text("\n".join(lines) + "\n")


def campus_loop():
    rng = random.Random(11)
    loop = {"origin": [0, 0, 1.8, 0], "preset": "loop", "size": 20, "speed": 1.0, "rate": 10}
    write("campus-loop", {
        "name": "campus-loop",
        "sensor": SENSOR,
        "world": campus_world(rng),
        "sessions": [
            {"name": "map", "trajectory": loop, "seed": 1},
            {"name": "localize", "trajectory": loop, "seed": 2,
             "odom": {"drift": [0.01, 0.0, 0.0, 0.0, 0.0, 0.001],
                      "noise": [0.002, 0.002, 0.001, 0.0002, 0.0002, 0.0005], "seed": 5}},
        ],
        "config": {},
    })


def arc_point(cx, cy, radius, theta, lateral):
    r = radius + lateral
    return cx + r * math.sin(theta), cy - r * math.cos(theta), math.degrees(theta)


def car_rows(rng, cx, cy, radius, t0, t1, tag, lateral=4.6, spacing=2.8):
    out = []
    n = int((t1 - t0) * radius / spacing)
    for side in (-lateral, lateral):
        for i in range(n):
            th = t0 + (i + 0.5 + rng.uniform(-0.05, 0.05)) * spacing / radius
            x, y, a = arc_point(cx, cy, radius, th, side)
            out.append(box(x, y, 4.5, 1.9, 1.5, a + rng.uniform(-3, 3), tag))
    return out


def bus_rows(rng, cx, cy, radius, t0, t1, tag, lateral=3.4, length=9.0, gap=1.0):
    out = []
    n = int((t1 - t0) * radius / (length + gap))
    for side in (-lateral, lateral):
        for i in range(n):
            th = t0 + (i + 0.5) * (length + gap) / radius
            x, y, a = arc_point(cx, cy, radius, th, side)
            out.append(box(x, y, length, 2.5, 3.4, a, tag))
    return out


def posts(cx, cy, radius, t0, t1, spacing, tag, lateral=1.3, r=0.12, h=4.0):
    out = []
    n = int((t1 - t0) * radius / spacing)
    for side in (-lateral, lateral):
        for i in range(n):
            x, y, _ = arc_point(cx, cy, radius, t0 + (i + 0.5) * spacing / radius, side)
            out.append(cyl(x, y, r, h, tag))
    return out


def canopy(cx, cy, radius, t0, t1, tag, length=9.5, width=7.0, z=4.0):
    out = []
    n = int((t1 - t0) * radius / length)
    for i in range(n):
        x, y, a = arc_point(cx, cy, radius, t0 + (i + 0.5) * length / radius, 0.0)
        out.append(box(x, y, length, width, 0.3, a, tag, z))
    for th in (t0, t0 + n * length / radius):
        x, y, a = arc_point(cx, cy, radius, th, 0.0)
        out.append(box(x, y, 0.3, width, z - 2.3, a, tag, 2.3))
    return out


def vans(rng, cx, cy, radius, t0, t1, count, tag, lateral=3.8):
    out = []
    for i in range(count):
        th = t0 + (t1 - t0) * (i + rng.uniform(0.3, 0.7)) / count
        side = lateral if i % 2 == 0 else -lateral
        x, y, a = arc_point(cx, cy, radius, th, side)
        out.append(box(x, y, 6.0, 2.2, 2.6, a + rng.choice((-1, 1)) * rng.uniform(8, 14), tag))
    return out


def parking_change():
    rng = random.Random(23)
    cx, cy, radius = 0.0, 20.0, 20.0
    t0, t1 = math.radians(80), math.radians(200)
    world = campus_world(rng, cx, cy)
    world += car_rows(rng, cx, cy, radius, t0, t1, "car", 4.6, 5.5)
    world += posts(cx, cy, radius, t0, t1, 5.5, "lamp")
    changed = [{"remove": "car"}, {"remove": "lamp"}]
    changed += [{"add": c} for c in posts(cx, cy, radius, t0, t1, 5.8, "pillar")]
    changed += [{"add": b} for b in bus_rows(rng, cx, cy, radius, t0, t1, "bus", 2.6, 9.0, 0.5)]
    changed += [{"add": c} for c in canopy(cx, cy, radius, t0, t1, "canopy")]
    changed += [{"add": v} for v in vans(rng, cx, cy, radius, t0, t1, 8, "van", 7.0)]
    loop = {"origin": [0, 0, 1.8, 0], "preset": "loop", "size": radius, "speed": 1.0, "rate": 10}
    write("parking-change", {
        "name": "parking-change",
        "sensor": SENSOR,
        "world": world,
        "sessions": [
            {"name": "map", "trajectory": loop, "seed": 1},
            {"name": "changed", "trajectory": loop, "seed": 2, "changes": changed,
             "odom": {"drift": [0.01, 0.0, 0.0, 0.0, 0.0, 0.0],
                      "noise": [0.002, 0.002, 0.001, 0.0002, 0.0002, 0.0005], "seed": 7}},
        ],
        "config": {},
        "region": {"min": [-30, 10, -5], "max": [30, 50, 20]},
    })


def street_world(rng):
    w = [GROUND]
    # perimeter loop x in [0, 100], y in [0, 56]; blocks line the outer side
    for x in range(4, 100, 11):
        w.append(box(x + rng.uniform(-1, 1), -9 - rng.uniform(0, 2), rng.uniform(6, 9), rng.uniform(5, 7),
                     rng.uniform(7, 12), rng.uniform(-25, 25)))
        w.append(box(x + rng.uniform(-1, 1), 65 + rng.uniform(0, 2), rng.uniform(6, 9), rng.uniform(5, 7),
                     rng.uniform(7, 12), rng.uniform(-25, 25)))
    for y in range(8, 54, 12):
        w.append(box(-15 - rng.uniform(0, 2), y + rng.uniform(-1, 1), rng.uniform(5, 7), rng.uniform(6, 9),
                     rng.uniform(7, 12), rng.uniform(-25, 25)))
        w.append(box(115 + rng.uniform(0, 2), y + rng.uniform(-1, 1), rng.uniform(5, 7), rng.uniform(6, 9),
                     rng.uniform(7, 12), rng.uniform(-25, 25)))
    # inner blocks either side of the middle street x = 50
    for x0, x1 in ((10, 44), (56, 90)):
        for y0, y1 in ((8, 26), (29, 48)):
            w.append(box((x0 + x1) / 2 + rng.uniform(-0.5, 0.5), (y0 + y1) / 2, x1 - x0, y1 - y0,
                         rng.uniform(6, 12), rng.uniform(-2, 2)))
    for y in (42.5, 46.0):
        w.append(cyl(47.2, y, 0.15, 5.0, "pole"))
        w.append(cyl(52.8, y + 1.5, 0.15, 5.0, "pole"))
    for x in range(2, 100, 8):
        w.append(cyl(x + rng.uniform(-1, 1), -4.5, rng.uniform(0.25, 0.4), rng.uniform(4, 6)))
        w.append(cyl(x + rng.uniform(-1, 1), 60.5, rng.uniform(0.25, 0.4), rng.uniform(4, 6)))
    return w


def construction_site(rng):
    site = []
    # screened site fencing along both kerbs of the middle street
    for y in range(8, 40, 4):
        site.append(box(47.0, y + 2, 0.2, 3.8, 4.5, 0.0, "hoarding"))
        site.append(box(53.0, y + 2, 0.2, 3.8, 4.5, 0.0, "hoarding"))
    for y in (14, 34):
        site.append(cyl(45.0, y + rng.uniform(-2, 2), 0.8, 25.0, "crane"))
    for y in (17, 33):
        site.append(box(54.5 + rng.uniform(0, 0.5), y, 1.2, 3.0, 3.0, rng.uniform(-10, 10), "site"))
    return site


def construction():
    rng = random.Random(31)
    world = street_world(rng)
    r = 6.0
    quarter = r * math.pi / 2
    loop = [[94, 0], [quarter, 90], [44, 0], [quarter, 90], [88, 0], [quarter, 90], [44, 0],
            [quarter, 90]]
    # cuts through the block along the never-driven middle street
    detour = [[44, 0], [quarter, 90], [44, 0], [quarter, -90], [38, 0], [quarter, -90], [44, 0],
              [quarter, -90], [88, 0], [quarter, -90], [44, 0], [quarter, -90]]
    origin = [0, 0, 1.8, 0]
    base = {"origin": origin, "speed": 1.0, "rate": 10}
    drift = {"drift": [0.01, 0.0, 0.0, 0.0, 0.0, 0.0002],
             "noise": [0.002, 0.002, 0.001, 0.0002, 0.0002, 0.0005]}
    site = [{"add": p} for p in construction_site(rng)]
    write("construction", {
        "name": "construction",
        "sensor": SENSOR,
        "world": world,
        "sessions": [
            {"name": "session1", "trajectory": dict(base, segments=loop), "seed": 1},
            {"name": "session2", "trajectory": dict(base, segments=detour), "seed": 2, "changes": site,
             "odom": dict(drift, seed=11)},
            {"name": "session3", "trajectory": dict(base, segments=detour, t0=10000.0), "seed": 3,
             "changes": site, "odom": dict(drift, seed=12)},
        ],
        "config": {},
        "region": {"min": [44, 4, -5], "max": [56, 52, 20]},
    })


def corridor():
    rng = random.Random(41)
    length = 30.0
    w = [GROUND]
    for side in (-1, 1):
        x = -3.0
        while x < length + 3:
            seg = rng.uniform(2.5, 4.0)
            depth = rng.choice((0.0, 0.0, 0.6, 1.0))
            w.append(box(x + seg / 2, side * (1.8 + depth + 0.15), seg, 0.3, 3.0, 0.0, "wall"))
            x += seg
    w.append(box(length + 4.0, 0, 0.3, 6.0, 3.0, 0.0, "wall"))
    w.append(box(-4.0, 0, 0.3, 6.0, 3.0, 0.0, "wall"))
    w.append(box(length / 2, 0, length + 8, 6.0, 0.3, 0.0, "ceiling", 3.0))
    for x in (6.0, 14.0, 22.0):
        w.append(cyl(x, rng.choice((-1.3, 1.3)), 0.12, 3.0, "pipe"))
    run = {"origin": [0, 0, 1.2, 0], "preset": "corridor", "size": length, "speed": 1.0, "rate": 10}
    write("corridor", {
        "name": "corridor",
        "sensor": dict(SENSOR, max_range=40),
        "world": w,
        "sessions": [
            {"name": "map", "trajectory": run, "seed": 1},
            {"name": "localize", "trajectory": run, "seed": 2,
             "odom": {"drift": [0.01, 0.0, 0.0, 0.0, 0.0, 0.0005],
                      "noise": [0.002, 0.002, 0.001, 0.0002, 0.0002, 0.0005], "seed": 9}},
        ],
        "config": {},
    })


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    campus_loop()
    parking_change()
    construction()
    corridor()
