#!/usr/bin/env python3
"""Generate the bundled planning instances under instances/.

The outputs are committed; rerunning this script reproduces them exactly.
Geometry is synthetic; dimensions and prices of the p1-like and p2-like
networks follow the published network parameters.
"""

import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "instances"

MACRO = {"id": 0, "name": "macro", "states": [(1350.0, 40.0)], "build_cost": 0.0}
MICRO_STATES = [(56.0, 0.0), (100.0, 3.15), (144.0, 6.3)]
PICO_STATES = [(6.8, 0.0), (10.0, 0.5), (14.7, 1.0)]


def fmt(x):
    if isinstance(x, float):
        r = repr(x)
        return r if ("e" in r or "." in r or "inf" in r) else r + ".0"
    return str(x)


def arr(xs):
    return "[" + ", ".join(fmt(x) for x in xs) + "]"


def write(name, *, years, period_hours, traffic, illumination, radio, economics, sites, tps, types):
    lines = ["schema = 1", f'name = "{name}"', ""]
    lines += ["[horizon]", f"years = {years}", f"period_hours = {arr(period_hours)}", ""]
    lines += ["[profiles]", f"traffic = {arr(traffic)}", f"illumination_w_m2 = {arr(illumination)}", ""]
    lines += ["[radio]"] + [f"{k} = {fmt(v)}" for k, v in radio.items()] + [""]
    lines += ["[economics]"]
    for k, v in economics.items():
        if k == "carbon_tax":
            lines.append("carbon_tax = { start = %s, step = %s }" % (fmt(v[0]), fmt(v[1])))
        else:
            lines.append(f"{k} = {fmt(v)}")
    lines.append("")
    for s in sites:
        lines += ["[[sites]]", f"id = {s['id']}", f'kind = "{s["kind"]}"', f"position = {arr(s['pos'])}"]
        if s.get("allowed"):
            lines.append(f"allowed_types = {arr(s['allowed'])}")
        lines.append("")
    for p in tps:
        lines += [
            "[[test_points]]",
            f"id = {p['id']}",
            f"position = {arr(p['pos'])}",
            f"activation_year = {p.get('activation', 1)}",
            f"initial_rate = {fmt(p['rate'])}",
            f"growth_rate = {fmt(p.get('growth', 0.2))}",
            "",
        ]
    for t in types:
        lines += ["[[bs_types]]", f"id = {t['id']}", f'name = "{t["name"]}"']
        lines.append("states = [" + ", ".join("{ total_w = %s, transmit_w = %s }" % (fmt(a), fmt(b)) for a, b in t["states"]) + "]")
        lines.append(f"build_cost = {fmt(t['build_cost'])}")
        if "solar" in t:
            lines.append("")
            lines.append("[bs_types.solar]")
            for k, v in t["solar"].items():
                lines.append(f"{k} = {arr(v) if isinstance(v, list) else fmt(v)}")
        lines.append("")
    (OUT / f"{name}.toml").write_text("\n".join(lines).rstrip() + "\n")


def solar(unit_cost, rating_w, battery_kwh, battery_cost, lifetime):
    return {
        "unit_cost_per_w": [unit_cost],
        "panel_rating_w": rating_w,
        "panel_area_eff_m2": rating_w / 1000.0,
        "battery_capacity_kwh": battery_kwh,
        "battery_min_fraction": 0.2,
        "battery_aging_rate": 0.05,
        "panel_aging_rate": 0.01,
        "battery_lifetime_years": lifetime,
        "battery_cost": battery_cost,
    }


def micro_types(unit_cost):
    return [
        MACRO,
        {"id": 1, "name": "micro", "states": MICRO_STATES, "build_cost": 6000.0},
        {"id": 2, "name": "solar micro", "states": MICRO_STATES, "build_cost": 6000.0,
         "solar": solar(unit_cost, 400.0, 4.0, 400.0, 7)},
    ]


ECON = {"discount_rate": 0.12, "inflation_rate": 0.0264, "grid_tariff_kwh": 0.2, "carbon_tax": (0.0, 0.0)}
RADIO_P1 = {"antenna_gain": 3.0, "path_loss_exponent": 3.0, "noise_w": 1e-5}
RADIO_P2 = {"antenna_gain": 3.0, "path_loss_exponent": 2.0, "noise_w": 1.5e-5}
MICRO_HOURS = [6.0, 6.0, 6.0, 6.0]
MICRO_TRAFFIC = [0.25, 1.0, 0.8, 0.5]
MICRO_SUN = [0.0, 700.0, 500.0, 0.0]


def micro_instances():
    write(
        "micro1", years=3, period_hours=MICRO_HOURS, traffic=MICRO_TRAFFIC, illumination=MICRO_SUN,
        radio=RADIO_P1, economics=ECON,
        sites=[
            {"id": 1, "kind": "existing", "pos": (0.0, 0.0)},
            {"id": 2, "kind": "candidate", "pos": (300.0, 0.0), "allowed": [1, 2]},
            {"id": 3, "kind": "candidate", "pos": (300.0, 200.0), "allowed": [1, 2]},
        ],
        tps=[
            {"id": 1, "pos": (380.0, 20.0), "rate": 10.0},
            {"id": 2, "pos": (400.0, 230.0), "rate": 10.0},
            {"id": 3, "pos": (330.0, 110.0), "rate": 8.0, "activation": 2},
            {"id": 4, "pos": (200.0, 60.0), "rate": 6.0},
        ],
        types=micro_types(1.6),
    )
    write(
        "micro2", years=2, period_hours=MICRO_HOURS, traffic=MICRO_TRAFFIC, illumination=MICRO_SUN,
        radio=RADIO_P2, economics=dict(ECON, grid_tariff_kwh=0.25),
        sites=[
            {"id": 10, "kind": "existing", "pos": (0.0, 0.0)},
            {"id": 11, "kind": "candidate", "pos": (5200.0, 0.0), "allowed": [1, 2]},
            {"id": 12, "kind": "candidate", "pos": (4700.0, 1900.0), "allowed": [2]},
        ],
        tps=[
            {"id": 1, "pos": (6000.0, 300.0), "rate": 12.0},
            {"id": 2, "pos": (5100.0, 3000.0), "rate": 9.0},
            {"id": 3, "pos": (5200.0, 1100.0), "rate": 9.0},
            {"id": 4, "pos": (4200.0, -200.0), "rate": 12.0, "activation": 2},
            {"id": 5, "pos": (2500.0, 1500.0), "rate": 6.0},
        ],
        types=micro_types(1.2),
    )
    types3 = micro_types(1.4)
    types3.append({"id": 3, "name": "pico", "states": [PICO_STATES[0], PICO_STATES[2]], "build_cost": 2500.0})
    write(
        "micro3", years=2, period_hours=MICRO_HOURS, traffic=MICRO_TRAFFIC, illumination=MICRO_SUN,
        radio=RADIO_P1, economics=dict(ECON, discount_rate=0.08),
        sites=[
            {"id": 1, "kind": "existing", "pos": (0.0, 0.0)},
            {"id": 2, "kind": "existing", "pos": (500.0, 0.0)},
            {"id": 3, "kind": "candidate", "pos": (250.0, 200.0), "allowed": [1, 2, 3]},
            {"id": 4, "kind": "candidate", "pos": (250.0, -180.0), "allowed": [3]},
        ],
        tps=[
            {"id": 1, "pos": (260.0, 270.0), "rate": 10.0},
            {"id": 2, "pos": (180.0, 230.0), "rate": 10.0},
            {"id": 3, "pos": (260.0, -230.0), "rate": 4.0},
            {"id": 4, "pos": (120.0, 40.0), "rate": 10.0},
            {"id": 5, "pos": (420.0, 60.0), "rate": 10.0, "activation": 2},
        ],
        types=types3,
    )


LARGE_HOURS = [3.0] * 8
LARGE_TRAFFIC = [0.10, 0.35, 0.80, 1.00, 0.85, 0.90, 0.75, 0.30]
LARGE_SUN = [800.0 * f for f in [0.0, 0.0, 0.35, 0.85, 1.00, 0.70, 0.20, 0.0]]


def large_types():
    return [
        MACRO,
        {"id": 1, "name": "micro", "states": MICRO_STATES, "build_cost": 6000.0},
        {"id": 2, "name": "solar micro", "states": MICRO_STATES, "build_cost": 6000.0,
         "solar": solar(3.0, 500.0, 5.0, 1000.0, 7)},
        {"id": 3, "name": "pico", "states": PICO_STATES, "build_cost": 2500.0},
        {"id": 4, "name": "solar pico", "states": PICO_STATES, "build_cost": 2500.0,
         "solar": solar(3.0, 60.0, 0.6, 150.0, 5)},
    ]


def clustered(rng, n_cs, n_tp, spread, radius, tp_offset, first_site_id=2):
    sites = [{"id": 1, "kind": "existing", "pos": (0.0, 0.0)}]
    centres = []
    for k in range(n_cs):
        ang = 2 * math.pi * k / n_cs + rng.uniform(-0.2, 0.2)
        r = radius * rng.uniform(0.75, 1.1)
        c = (round(r * math.cos(ang), 1), round(r * math.sin(ang), 1))
        centres.append(c)
        allowed = [1, 2, 3, 4] if k % 3 != 2 else [3, 4]
        sites.append({"id": first_site_id + k, "kind": "candidate", "pos": c, "allowed": allowed})
    tps = []
    for i in range(n_tp):
        if i < 3:
            # close to the macro
            ang = rng.uniform(0, 2 * math.pi)
            d = rng.uniform(0.3, 0.6) * tp_offset * 3
            pos = (round(d * math.cos(ang), 1), round(d * math.sin(ang), 1))
        else:
            c = centres[(i - 3) % n_cs]
            ang = rng.uniform(0, 2 * math.pi)
            d = rng.uniform(0.4, 1.0) * tp_offset
            pos = (round(c[0] + d * math.cos(ang), 1), round(c[1] + d * math.sin(ang), 1))
        tps.append({"id": i + 1, "pos": pos, "activation": 1 + rng.randrange(0, 4) if i >= 3 else 1})
    return sites, tps


def large_instances():
    rng = random.Random(20160101)
    sites, tps = clustered(rng, 8, 18, 0, 260.0, 40.0)
    for p in tps:
        p["rate"] = 10.0
    write(
        "p1-like", years=10, period_hours=LARGE_HOURS, traffic=LARGE_TRAFFIC, illumination=LARGE_SUN,
        radio=RADIO_P1, economics=ECON, sites=sites, tps=tps, types=large_types(),
    )
    rng = random.Random(20160202)
    sites, tps = clustered(rng, 14, 30, 0, 1500.0, 120.0)
    for p in tps:
        p["rate"] = 12.0
    write(
        "p2-like", years=10, period_hours=LARGE_HOURS, traffic=LARGE_TRAFFIC, illumination=LARGE_SUN,
        radio=RADIO_P2, economics=ECON, sites=sites, tps=tps, types=large_types(),
    )


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    micro_instances()
    large_instances()
