"""Run manifests: everything needed to reproduce an output file family.

A manifest records the tool version, the fully resolved configuration,
the derived seed list, the subcommand and its arguments, a start
timestamp and the config content hash.  Re-running from a manifest
reproduces all data files byte-identically; the timestamp is excluded
from the hash.
"""

from __future__ import annotations

import datetime
import json
from pathlib import Path

from . import __version__
from .config import ResolvedConfig, config_hash, parse_config, render_config

MANIFEST_NAME = "manifest.json"


def build_manifest(subcommand: str, cfg: ResolvedConfig,
                   seed_list: list[int], args: dict) -> dict:
    return {
        "tool": "macrolab",
        "version": __version__,
        "subcommand": subcommand,
        "args": args,
        "seed_list": [int(s) for s in seed_list],
        "config_hash": config_hash(cfg),
        "config": render_config(cfg),
        "started_at": datetime.datetime.now(datetime.timezone.utc)
        .isoformat(timespec="seconds"),
    }


def write_manifest(manifest: dict, out_dir: Path) -> Path:
    from .output import atomic_write_text
    path = Path(out_dir) / MANIFEST_NAME
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True)
                      + "\n")
    return path


def load_manifest(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def rerun_from_manifest(manifest_path: Path, out_dir: Path) -> int:
    """Re-execute the recorded subcommand with the recorded configuration."""
    from .cli import dispatch
    m = load_manifest(Path(manifest_path))
    cfg = parse_config(m["config"])
    return dispatch(m["subcommand"], cfg, Path(out_dir),
                    threads=int(m["args"].get("threads", 1)))
