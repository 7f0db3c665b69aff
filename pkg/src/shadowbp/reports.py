"""CSV and manifest writers for simulation results."""

from __future__ import annotations

import csv
import json
import os
import platform
from datetime import datetime, timezone

from .harness import MetricsLog, hop_profile
from .topologies import undirected_allocation


def fmt(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    return "" if x is None else str(x)


def write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_series(path, log: MetricsLog):
    rows = zip(range(log.slots), log.shadow_total.tolist(), log.real_total.tolist())
    write_rows(path, ["slot", "shadow_total", "real_total"], rows)


def write_summary(path, log: MetricsLog, network):
    """Per-queue window averages: scheduling queues then link FIFOs."""
    kind = "dest_queue" if log.engine == "minresource" else (
        "shadow" if log.engine == "shadow" else "flow_queue")
    rows = []
    for (node, key), v in sorted(log.avg_queue.items()):
        rows.append((kind, node, "", key, v))
    for l, v in sorted(log.avg_fifo.items()):
        link = network.links[l]
        rows.append(("fifo", link.tail, f"{link.tail}-{link.head}", "", v))
    write_rows(path, ["queue", "node", "link", "key", "mean"], rows)


def write_totals(path, log: MetricsLog):
    rows = [("slots", log.slots), ("warmup", log.warmup),
            ("mean_shadow_total", log.mean_shadow_total()),
            ("mean_real_total", log.mean_real_total())]
    if log.engine == "shadow":
        rows.append(("mean_latency", log.mean_latency()))
        rows.append(("fifo_violations", log.fifo_violations))
        for fid, x in sorted(log.mean_rate.items()):
            rows.append((f"mean_rate[{fid}]", x))
    for key, n in sorted(log.window_delivered.items()):
        rows.append((f"throughput[{key}]", n / log.window if log.window else 0.0))
    rows.append(("conservation_ok", log.conservation_ok()))
    write_rows(path, ["metric", "value"], rows)


def write_allocation(path, log: MetricsLog, network):
    rows = []
    for (l, key), rate in sorted(log.allocation().items()):
        link = network.links[l]
        rows.append((f"({link.tail},{link.head})", link.tail, link.head, key, rate))
    write_rows(path, ["link", "tail", "head", "key", "rate"], rows)


def write_edge_allocation(path, log: MetricsLog, network):
    """Allocation folded onto undirected edges, one column per flow key."""
    folded = undirected_allocation(network, log.allocation())
    keys = sorted({k for _, k in folded})
    edges = sorted({(min(l.tail, l.head), max(l.tail, l.head)) for l in network.links})
    rows = [[f"({u},{v})"] + [folded.get(((u, v), k), 0.0) for k in keys] for u, v in edges]
    write_rows(path, ["link"] + [f"rate[{k}]" for k in keys], rows)


def write_hop_profiles(path, log: MetricsLog, network):
    rows = []
    for fid, route in sorted(log.routes.items()):
        prof = hop_profile(log, fid)
        for hop, (node, v) in enumerate(zip(route, prof)):
            rows.append((fid, hop, node, v))
    write_rows(path, ["flow", "hop", "node", "mean"], rows)


def write_chain_profile(path, log: MetricsLog, network):
    """Per-node long-flow shadow, short-flow shadow and real FIFO means on
    the chain topology (flow 0 long, flow ``i`` on link ``i``)."""
    rows = []
    N = network.num_links
    for i in range(N):
        long_q = log.avg_queue.get((i, 0), 0.0)
        short_q = log.avg_queue.get((i, i + 1), 0.0)
        fifo = log.avg_fifo.get(network.link_index(i, i + 1), 0.0)
        rows.append((i, long_q, short_q, fifo))
    write_rows(path, ["node", "long_flow_shadow", "short_flow_shadow", "real_fifo"], rows)


def write_manifest(path, resolved, extra=None):
    doc = {
        "package": __package__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "python": platform.python_version(),
        "scenario": resolved,
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def write_run_outputs(out_dir, log: MetricsLog, network, resolved, topology=None, prefix=""):
    os.makedirs(out_dir, exist_ok=True)
    p = lambda name: os.path.join(out_dir, prefix + name)  # noqa: E731
    write_series(p("series.csv"), log)
    write_summary(p("summary.csv"), log, network)
    write_totals(p("totals.csv"), log)
    write_allocation(p("allocation.csv"), log, network)
    if any(network.link_index(l.head, l.tail) is not None for l in network.links):
        write_edge_allocation(p("allocation_edges.csv"), log, network)
    if log.routes:
        write_hop_profiles(p("hop_profile.csv"), log, network)
    if topology and topology.get("kind") == "linear" and log.engine == "shadow":
        write_chain_profile(p("chain_profile.csv"), log, network)
    write_manifest(p("manifest.json"), resolved,
                   {"topology": topology, "outputs": sorted(os.listdir(out_dir))})
