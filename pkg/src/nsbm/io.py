"""File formats: NDJSON networks and samples, CSV traces and metrics.

Network files hold one JSON object per line with keys id, n, edges (s < t,
0-based, lexicographically sorted), z_true and xi_true (null when unknown).
Samples files hold one draw per line with keys iter, z, xi. CSV files are
UTF-8 with a header row and LF line endings.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .model import NetworkCollection, PosteriorSamples
from .netcore import Adjacency

__all__ = [
    "write_collection",
    "read_collection",
    "read_edgelist_dir",
    "write_samples",
    "read_samples",
    "write_trace",
    "write_labels",
    "read_labels",
    "write_metrics_csv",
]


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def write_collection(path, coll: NetworkCollection) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for j, A in enumerate(coll.networks):
            rec = {
                "id": f"net-{j:04d}",
                "n": int(A.n),
                "edges": [[int(s), int(t)] for s, t in A.edges],
                "z_true": int(coll.z_true[j]) if coll.z_true is not None else None,
                "xi_true": [int(x) for x in coll.xi_true[j]] if coll.xi_true is not None else None,
            }
            f.write(_dump(rec) + "\n")


def read_collection(path) -> NetworkCollection:
    networks = []
    z_true = []
    xi_true = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                networks.append(Adjacency.from_edges(rec["n"], rec["edges"]))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
                raise ValueError(f"{path}:{line_no}: bad network record: {e}") from e
            z_true.append(rec.get("z_true"))
            xi_true.append(rec.get("xi_true"))
    has_z = all(v is not None for v in z_true) and len(z_true) > 0
    has_xi = all(v is not None for v in xi_true) and len(xi_true) > 0
    return NetworkCollection(
        networks,
        z_true=np.asarray(z_true, dtype=np.int64) if has_z else None,
        xi_true=[np.asarray(v, dtype=np.int64) for v in xi_true] if has_xi else None,
    )


def read_edgelist_dir(path) -> NetworkCollection:
    """One network per file, one '<s> <t>' pair per line, 0-based node ids."""
    names = sorted(n for n in os.listdir(path) if not n.startswith("."))
    if not names:
        raise ValueError(f"no edge-list files found in {path}")
    networks = []
    for name in names:
        edges = []
        n = 0
        with open(os.path.join(path, name), "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 2:
                    raise ValueError(f"{name}:{line_no}: expected '<s> <t>'")
                s, t = int(parts[0]), int(parts[1])
                edges.append((s, t))
                n = max(n, s + 1, t + 1)
        networks.append(Adjacency.from_edges(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2)))
    return NetworkCollection(networks)


def write_samples(path, samples: PosteriorSamples, replicate: int | None = None) -> None:
    mode = "a" if replicate is not None and replicate > 0 else "w"
    with open(path, mode, encoding="utf-8", newline="\n") as f:
        for i in range(samples.n_draws):
            rec = {}
            if replicate is not None:
                rec["replicate"] = replicate
            rec["iter"] = int(samples.iters[i])
            rec["z"] = [int(v) for v in samples.z_draws[i]]
            rec["xi"] = [[int(v) for v in x] for x in samples.xi_draws[i]]
            f.write(_dump(rec) + "\n")


def read_samples(path) -> PosteriorSamples:
    samples = PosteriorSamples(kind="", seed=0)
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                samples.iters.append(int(rec["iter"]))
                samples.z_draws.append(np.asarray(rec["z"], dtype=np.int64))
                samples.xi_draws.append([np.asarray(x, dtype=np.int64) for x in rec["xi"]])
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
                raise ValueError(f"{path}:{line_no}: bad draw record: {e}") from e
    return samples


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_trace(path, samples: PosteriorSamples, replicate: int | None = None) -> None:
    """CSV trace; truth-dependent NMI columns appear only when truth was present."""
    has_truth = any(r.z_nmi is not None or r.mean_xi_nmi is not None for r in samples.trace)
    cols = ["iter", "log_density", "occupied_classes", "mean_occupied_communities"]
    if has_truth:
        cols += ["z_nmi", "mean_xi_nmi"]
    cols.append("elapsed_ms")
    header = (["replicate"] if replicate is not None else []) + cols
    mode = "a" if replicate is not None and replicate > 0 else "w"
    with open(path, mode, encoding="utf-8", newline="\n") as f:
        if mode == "w":
            f.write(",".join(header) + "\n")
        for r in samples.trace:
            row = [] if replicate is None else [str(replicate)]
            row += [str(r.iter), _fmt(r.log_density), str(r.occupied_classes), _fmt(r.mean_occupied_communities)]
            if has_truth:
                row += [_fmt(r.z_nmi), _fmt(r.mean_xi_nmi)]
            row.append(_fmt(r.elapsed_ms))
            f.write(",".join(row) + "\n")


def write_labels(path, run_id: str, z, xi) -> None:
    rec = {
        "run_id": run_id,
        "z": [int(v) for v in z],
        "xi": [[int(v) for v in x] for x in xi],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_dump(rec) + "\n")


def read_labels(path):
    with open(path, "r", encoding="utf-8") as f:
        try:
            rec = json.loads(f.read())
            run_id = str(rec.get("run_id", ""))
            z = np.asarray(rec["z"], dtype=np.int64)
            xi = [np.asarray(x, dtype=np.int64) for x in rec["xi"]]
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
            raise ValueError(f"{path}: bad labels file: {e}") from e
    return run_id, z, xi


def write_metrics_csv(path, rows) -> None:
    """rows: iterable of (run_id, z_nmi, mean_xi_nmi)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("run_id,z_nmi,mean_xi_nmi\n")
        for run_id, z_nmi, xi_nmi in rows:
            f.write(f"{run_id},{_fmt(float(z_nmi))},{_fmt(float(xi_nmi))}\n")
