#!/usr/bin/env python3
"""Download Cora / Citeseer / Wiki and convert them to the edges+labels
format this package reads (``data/<name>.edges``, ``data/<name>.labels``).

Usage:
    python3 scripts/fetch_datasets.py [cora] [citeseer] [wiki] [--dest DIR]

Cora and Citeseer come from the LINQS archives (``<name>.cites`` gives the
citation edges, the last column of ``<name>.content`` gives the class label).
Wiki comes from the OpenNE repository (an edge list plus a category file).
Needs outbound network access; on an offline machine, download the archives
elsewhere and pass ``--archive PATH`` per dataset, or produce the two output
files by hand in the same format:

    <name>.edges   one 'src dst' pair per line, '#' comments allowed
    <name>.labels  one 'node_id label' pair per line
"""

import argparse
import io
import sys
import tarfile
import urllib.request
from pathlib import Path

LINQS = "https://linqs-data.soe.ucsc.edu/public/lbc"
OPENNE = "https://raw.githubusercontent.com/thunlp/OpenNE/master/data/wiki"

SOURCES = {
    "cora": f"{LINQS}/cora.tgz",
    "citeseer": f"{LINQS}/citeseer.tgz",
    "wiki": (f"{OPENNE}/Wiki_edgelist.txt", f"{OPENNE}/Wiki_category.txt"),
}


def fetch(url, timeout=60):
    print(f"fetching {url}")
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read()


def convert_linqs(name, archive_bytes, dest):
    """LINQS tgz layout: <name>/<name>.cites (edges, 'cited citing' per
    line) and <name>/<name>.content (id, sparse features, class label)."""
    edges, labels = [], []
    with tarfile.open(fileobj=io.BytesIO(archive_bytes), mode="r:gz") as tar:
        for member in tar.getmembers():
            if member.name.endswith(f"{name}.cites"):
                for line in tar.extractfile(member).read().decode().splitlines():
                    parts = line.split()
                    if len(parts) == 2:
                        edges.append((parts[0], parts[1]))
            elif member.name.endswith(f"{name}.content"):
                for line in tar.extractfile(member).read().decode().splitlines():
                    parts = line.split()
                    if len(parts) >= 2:
                        labels.append((parts[0], parts[-1]))
    if not edges or not labels:
        raise RuntimeError(f"{name}: archive did not contain .cites/.content files")
    write_pair_files(name, edges, labels, dest)


def convert_wiki(edge_bytes, label_bytes, dest):
    edges = [tuple(line.split()[:2]) for line in edge_bytes.decode().splitlines() if line.strip()]
    labels = [tuple(line.split()[:2]) for line in label_bytes.decode().splitlines() if line.strip()]
    write_pair_files("wiki", edges, labels, dest)


def write_pair_files(name, edges, labels, dest):
    dest.mkdir(parents=True, exist_ok=True)
    edge_path = dest / f"{name}.edges"
    label_path = dest / f"{name}.labels"
    with open(edge_path, "w") as fh:
        fh.write(f"# {name}: {len(edges)} raw directed edges (loader symmetrizes)\n")
        for u, v in edges:
            fh.write(f"{u} {v}\n")
    # keep only one label per node, first occurrence wins
    seen = set()
    with open(label_path, "w") as fh:
        fh.write("# node_id label\n")
        for node, label in labels:
            if node not in seen:
                seen.add(node)
                fh.write(f"{node} {label}\n")
    print(f"wrote {edge_path} ({len(edges)} edges) and {label_path} ({len(seen)} labels)")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("datasets", nargs="*", help="any of: cora citeseer wiki (default: all)")
    ap.add_argument("--dest", default="data", help="output directory (default ./data)")
    ap.add_argument(
        "--archive",
        default=None,
        help="use a locally downloaded cora/citeseer .tgz instead of the network",
    )
    args = ap.parse_args()
    names = args.datasets or ["cora", "citeseer", "wiki"]
    unknown = [n for n in names if n not in SOURCES]
    if unknown:
        ap.error(f"unknown dataset(s): {', '.join(unknown)} (choose from {', '.join(SOURCES)})")
    dest = Path(args.dest)

    failures = 0
    for name in names:
        try:
            if name in ("cora", "citeseer"):
                blob = (
                    Path(args.archive).read_bytes() if args.archive else fetch(SOURCES[name])
                )
                convert_linqs(name, blob, dest)
            else:
                edge_url, label_url = SOURCES["wiki"]
                convert_wiki(fetch(edge_url), fetch(label_url), dest)
        except Exception as exc:
            failures += 1
            print(f"{name}: FAILED ({exc})", file=sys.stderr)
            print(
                f"{name}: if this machine is offline, fetch the source files by hand "
                f"(see module docstring) and write {dest}/{name}.edges + {dest}/{name}.labels",
                file=sys.stderr,
            )
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
