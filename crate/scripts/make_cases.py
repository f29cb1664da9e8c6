#!/usr/bin/env python3
"""Generate the bundled case118 / case300 test systems.

Both systems are synthetic: they match the bus/branch/generator counts of
the classic 118- and 300-bus test cases but carry generated topology and
parameters. Ratings are sized from a DC base-point solve so every case is
feasible with margin while a handful of branches stay tight enough to bind
under cost-optimal dispatch.

Deterministic: fixed seeds, stable iteration order, fixed float formatting.
"""

import numpy as np


def build_topology(rng, n_bus, n_branch):
    """Spanning tree with locality bias plus short-range chords."""
    edges = []
    edge_set = set()
    for b in range(1, n_bus):
        # attach to a recent bus most of the time: keeps diameter grid-like
        if b == 1 or rng.random() < 0.7:
            anchor = b - 1
        else:
            anchor = int(rng.integers(max(0, b - 12), b))
        edges.append((anchor, b))
        edge_set.add((anchor, b))
    while len(edges) < n_branch:
        a = int(rng.integers(0, n_bus))
        span = int(rng.integers(2, 15))
        b = a + span
        if b >= n_bus:
            continue
        key = (min(a, b), max(a, b))
        if key in edge_set:
            continue
        edge_set.add(key)
        edges.append(key)
    return edges


def dc_flows(n_bus, edges, x, p_inj, ref):
    n_l = len(edges)
    c = np.zeros((n_l, n_bus))
    for k, (f, t) in enumerate(edges):
        c[k, f] = 1.0
        c[k, t] = -1.0
    bf = c / x[:, None]
    bbus = c.T @ bf
    keep = [i for i in range(n_bus) if i != ref]
    theta = np.zeros(n_bus)
    theta[keep] = np.linalg.solve(bbus[np.ix_(keep, keep)], p_inj[keep])
    return bf @ theta


def make_case(name, seed, n_bus, n_branch, n_gen, colocated_pairs, unlimited_frac):
    rng = np.random.default_rng(seed)
    edges = build_topology(rng, n_bus, n_branch)
    x = np.round(rng.uniform(0.01, 0.09, size=n_branch), 4)
    r = np.round(x * rng.uniform(0.08, 0.25, size=n_branch), 4)
    b_chg = np.round(x * rng.uniform(0.5, 4.0, size=n_branch), 4)

    # generator placement: distinct buses, optionally a few shared buses
    gen_buses = list(rng.choice(n_bus, size=n_gen - colocated_pairs, replace=False))
    for i in range(colocated_pairs):
        gen_buses.append(gen_buses[i])
    gen_buses.sort()
    pmax = np.round(rng.uniform(120.0, 620.0, size=n_gen), 1)
    pmin = np.where(rng.random(n_gen) < 0.25, np.round(0.1 * pmax, 1), 0.0)
    cost_a = np.round(rng.uniform(0.004, 0.05, size=n_gen), 5)
    cost_b = np.round(rng.uniform(12.0, 45.0, size=n_gen), 3)
    cost_c = np.round(rng.uniform(0.0, 400.0, size=n_gen), 2)

    # loads on ~60% of buses, scaled to 58% of capacity
    load_mask = rng.random(n_bus) < 0.6
    pd = np.where(load_mask, rng.uniform(15.0, 130.0, size=n_bus), 0.0)
    pd *= 0.58 * pmax.sum() / pd.sum()
    pd = np.round(pd, 2)

    # base point 1: capacity-proportional dispatch
    total = pd.sum()
    pg_prop = pmax * (total / pmax.sum())
    # base point 2: merit order by linear cost
    order = np.argsort(cost_b, kind="stable")
    pg_greedy = np.zeros(n_gen)
    rem = total
    for g in order:
        take = min(pmax[g], rem)
        pg_greedy[g] = take
        rem -= take

    def injections(pg):
        inj = -pd.copy()
        for g, bus in enumerate(gen_buses):
            inj[bus] += pg[g]
        return inj

    ref = gen_buses[0]
    f_prop = dc_flows(n_bus, edges, x, injections(pg_prop), ref)
    f_greedy = dc_flows(n_bus, edges, x, injections(pg_greedy), ref)

    envelope = np.maximum(np.abs(f_prop), np.abs(f_greedy))
    rate = 1.15 * envelope + 5.0
    # tighten the most loaded corridors so cost-optimal dispatch meets limits
    tight = np.argsort(-np.abs(f_greedy), kind="stable")[:12]
    for k in tight:
        rate[k] = max(1.02 * abs(f_prop[k]) + 1.0, 0.80 * abs(f_greedy[k]))
    rate = np.round(np.maximum(rate, 10.0), 1)
    unlimited = rng.random(n_branch) < unlimited_frac
    rate[unlimited] = 0.0

    bus_type = np.ones(n_bus, dtype=int)
    for bus in gen_buses:
        bus_type[bus] = 2
    bus_type[ref] = 3

    lines = []
    lines.append(f"function mpc = {name}")
    lines.append(f"% {name.upper()}  Synthetic {n_bus}-bus system in MATPOWER format.")
    lines.append(f"%   Generated by scripts/make_cases.py (seed {seed}); counts follow the")
    lines.append(f"%   classic {n_bus}-bus case ({n_branch} branches, {n_gen} generators).")
    lines.append("")
    lines.append("mpc.version = '2';")
    lines.append("mpc.baseMVA = 100;")
    lines.append("")
    lines.append("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin")
    lines.append("mpc.bus = [")
    for i in range(n_bus):
        qd = round(0.3 * pd[i], 2)
        lines.append(
            f"\t{i + 1}\t{bus_type[i]}\t{pd[i]}\t{qd}\t0\t0\t1\t1\t0\t230\t1\t1.06\t0.94;"
        )
    lines.append("];")
    lines.append("")
    lines.append("%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\t(zeros)")
    lines.append("mpc.gen = [")
    for g in range(n_gen):
        lines.append(
            f"\t{gen_buses[g] + 1}\t{round(pg_prop[g], 1)}\t0\t300\t-300\t1\t100\t1"
            f"\t{pmax[g]}\t{pmin[g]}\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0;"
        )
    lines.append("];")
    lines.append("")
    lines.append("%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax")
    lines.append("mpc.branch = [")
    for k, (f, t) in enumerate(edges):
        lines.append(
            f"\t{f + 1}\t{t + 1}\t{r[k]}\t{x[k]}\t{b_chg[k]}\t{rate[k]}\t{rate[k]}\t{rate[k]}"
            f"\t0\t0\t1\t-360\t360;"
        )
    lines.append("];")
    lines.append("")
    lines.append("%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0")
    lines.append("mpc.gencost = [")
    for g in range(n_gen):
        lines.append(f"\t2\t0\t0\t3\t{cost_a[g]}\t{cost_b[g]}\t{cost_c[g]};")
    lines.append("];")
    lines.append("")
    return "\n".join(lines)


def main():
    import pathlib

    out = pathlib.Path(__file__).resolve().parent.parent / "data"
    out.mkdir(exist_ok=True)
    (out / "case118.m").write_text(
        make_case("case118", seed=118, n_bus=118, n_branch=186, n_gen=54,
                  colocated_pairs=0, unlimited_frac=0.0)
    )
    (out / "case300.m").write_text(
        make_case("case300", seed=300, n_bus=300, n_branch=411, n_gen=69,
                  colocated_pairs=3, unlimited_frac=0.15)
    )
    print("wrote case118.m, case300.m")


if __name__ == "__main__":
    main()
