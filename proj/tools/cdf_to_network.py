#!/usr/bin/env python3
"""Convert an IEEE Common Data Format case to a dapi network file.

Only the topology and branch impedances are used. Each branch becomes a line
with susceptance b = x / (r^2 + x^2) / Z_base, where Z_base = kV^2 / MVA.
Parallel branches are merged by summing their susceptances. Taps, shunts and
line charging are dropped. Inertia and damping are not part of the CDF and
come from the command line as uniform defaults.
"""

import argparse
import sys


def read_cdf(lines):
    """Returns (base_mva, bus ids, branches as (from, to, r, x))."""
    base_mva = float(lines[0][31:37])
    buses, branches = [], []
    section = None
    for line in lines[1:]:
        if line.startswith("BUS DATA FOLLOWS"):
            section = "bus"
            continue
        if line.startswith("BRANCH DATA FOLLOWS"):
            section = "branch"
            continue
        if line.startswith("-999"):
            section = None
            continue
        if section == "bus":
            buses.append(int(line[0:4]))
        elif section == "branch":
            branches.append((int(line[0:4]), int(line[5:9]), float(line[19:29]), float(line[29:40])))
    return base_mva, buses, branches


def convert(text, name, voltage_kv, inertia, damping, frequency_hz):
    base_mva, buses, branches = read_cdf(text.splitlines())
    z_base = voltage_kv**2 / base_mva
    merged = {}
    for a, b, r, x in branches:
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        merged[key] = merged.get(key, 0.0) + x / (r * r + x * x) / z_base
    out = [
        f"# Converted from IEEE CDF with Z_base = {z_base:g} ohm; taps and charging dropped.",
        "schema = 1",
        f"name = {name}",
        f"frequency_hz = {frequency_hz:g}",
        "",
        "[defaults]",
        f"inertia = {inertia:g}",
        f"damping = {damping:g}",
        f"voltage_kv = {voltage_kv:g}",
        "load_kw = 0",
        "",
        "[buses]",
        *(str(b) for b in buses),
        "",
        "[lines]",
        *(f"{a} {b} {w:.6g}" for (a, b), w in sorted(merged.items())),
    ]
    return "\n".join(out) + "\n"


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("cdf", help="IEEE CDF input file")
    p.add_argument("-o", "--output", help="output network file (default: stdout)")
    p.add_argument("--name", default="network")
    p.add_argument("--voltage-kv", type=float, default=132.0)
    p.add_argument("--inertia", type=float, default=1e5)
    p.add_argument("--damping", type=float, default=1.0)
    p.add_argument("--frequency-hz", type=float, default=50.0)
    args = p.parse_args(argv)
    with open(args.cdf, encoding="ascii", errors="replace") as f:
        text = convert(f.read(), args.name, args.voltage_kv, args.inertia, args.damping, args.frequency_hz)
    if args.output:
        with open(args.output, "w", encoding="ascii") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
