"""Run reports, exit codes and the benchmark table."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .cegis import CegisConfig, CegisResult
from .model import ProblemInstance
from .runtime import DwellTimes

__all__ = [
    "RunReport",
    "EXIT_CODES",
    "exit_code",
    "build_report",
    "strip_timing",
    "read_clf",
    "BENCH_COLUMNS",
    "bench_row",
    "write_bench_csv",
    "format_table",
]

# one code per outcome; argparse itself exits with 2 on usage errors
EXIT_CODES = {
    "Success": 0,
    "verified": 0,
    "rws-pass": 0,
    "refuted": 1,
    "rws-fail": 1,
    "CSpaceEmpty": 3,
    "Budget": 4,
    "FalsifierUnknown": 5,
    "unknown": 6,
    "file-not-found": 7,
    "parse-error": 8,
    "outside-W": 9,
}

TIMING_KEYS = frozenset({"timing"})


def exit_code(status: str) -> int:
    try:
        return EXIT_CODES[status]
    except KeyError:
        raise ValueError(f"no exit code for status {status!r}") from None


@dataclass
class RunReport:
    problem: str
    command: str
    status: str
    config: dict[str, Any]
    result: dict[str, Any] | None = None
    verification: dict[str, Any] | None = None
    dwell: dict[str, Any] | None = None
    falsifier: dict[str, Any] = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "RunReport":
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def write(self, directory: str | Path, name: str = "report.json") -> Path:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        path = out / name
        path.write_text(self.to_json())
        return path

    @property
    def exit_code(self) -> int:
        return exit_code(self.status)


def build_report(
    inst: ProblemInstance,
    cfg: CegisConfig,
    result: CegisResult,
    dw: DwellTimes | None = None,
    lam: float | None = None,
    dwell_time: float = 0.0,
) -> RunReport:
    config = cfg.to_dict()
    config["eps_q"] = inst.eps_q
    config["lambda"] = inst.lam if lam is None else lam
    res = result.to_dict()
    timing = dict(res["timing"])
    if dw is not None:
        timing["dwell"] = dwell_time
    falsifier = {
        "boxes": result.boxes,
        "verification_boxes": None if result.verification is None else list(result.verification.boxes),
    }
    return RunReport(
        problem=inst.name,
        command="solve",
        status=result.status,
        config=config,
        result=res,
        verification=res["verification"],
        dwell=None if dw is None else dw.to_dict(),
        falsifier=falsifier,
        timing=timing,
    )


def strip_timing(doc: Any) -> Any:
    """Copy of a decoded report with every timing entry removed."""
    if isinstance(doc, dict):
        return {k: strip_timing(v) for k, v in doc.items() if k not in TIMING_KEYS}
    if isinstance(doc, list):
        return [strip_timing(v) for v in doc]
    return doc


def read_clf(path: str | Path) -> tuple[list[float], float | None]:
    """``(a, beta)`` from a CLF file or a solve report; ``beta`` may be absent."""
    doc = json.loads(Path(path).read_text())
    if "result" in doc and isinstance(doc["result"], dict):
        doc = doc["result"]
    if doc.get("a") is None:
        raise ValueError(f"{path}: no coefficients under 'a'")
    a = [float(v) for v in doc["a"]]
    beta = doc.get("beta")
    return a, None if beta is None else float(beta)


# -- benchmark table ------------------------------------------------------------------

BENCH_COLUMNS = (
    "problem",
    "n",
    "modes",
    "eps_q",
    "eps_t1",
    "eps_t3",
    "delta",
    "iterations",
    "candidate_s",
    "falsifier_s",
    "total_s",
    "status",
    "message",
)


def bench_row(inst: ProblemInstance, cfg: CegisConfig, result: CegisResult) -> dict:
    t = result.timing
    return {
        "problem": inst.name,
        "n": inst.n,
        "modes": inst.nmodes,
        "eps_q": inst.eps_q,
        "eps_t1": cfg.eps_t[0],
        "eps_t3": cfg.eps_t[2],
        "delta": cfg.delta,
        "iterations": result.iterations,
        "candidate_s": round(t["candidate"], 3),
        "falsifier_s": round(t["falsifier"], 3),
        "total_s": round(t["total"], 3),
        "status": result.status,
        "message": result.message,
    }


def write_bench_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        w.writerows(rows)


def format_table(rows: list[dict]) -> str:
    cols = [c for c in BENCH_COLUMNS if c != "message"]
    cells = [[str(r.get(c, "")) for c in cols] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)
