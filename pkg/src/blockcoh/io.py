"""State files, bundled fixtures, CSV emission and run manifests."""

from __future__ import annotations

import json
import logging
import platform
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .blocks import ProjectorSet, product_to_st
from .linalg import QuantumState, ValidationError, nearest_density_matrix

log = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
FIXTURES = ("ordering_pair_rho1", "ordering_pair_rho2", "l1_rel_pair_rho1", "l1_rel_pair_rho2")


@dataclass(frozen=True, eq=False)
class StateFile:
    """A density matrix on disk: ``{"dim", "re", "im", "basis"?}`` JSON.

    ``basis`` is ``"st"`` (default: |S>, |T+1>, |T0>, |T-1>) or ``"product"``
    (|uu>, |ud>, |du>, |dd>). Product-basis states are rotated into the S-T
    basis when converted with :meth:`to_state`.
    """

    matrix: np.ndarray
    basis: str = "st"
    note: str = ""

    @classmethod
    def parse(cls, text: str, source: str = "<string>") -> StateFile:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{source}: line {exc.lineno}: {exc.msg}") from exc
        for key in ("dim", "re", "im"):
            if key not in data:
                raise ValidationError(f"{source}: missing field {key!r}")
        dim = data["dim"]
        try:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data["im"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{source}: re/im must be numeric arrays") from exc
        if not isinstance(dim, int) or dim < 1 or re.shape != (dim, dim) or im.shape != (dim, dim):
            raise ValidationError(f"{source}: re/im must both be {dim}x{dim}")
        basis = data.get("basis", "st")
        if basis not in ("st", "product"):
            raise ValidationError(f"{source}: unknown basis {basis!r}")
        if basis == "product" and dim != 4:
            raise ValidationError(f"{source}: product basis needs dim 4")
        return cls(re + 1j * im, basis, data.get("note", ""))

    @classmethod
    def load(cls, path) -> StateFile:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read state file {p}: {exc}") from exc
        return cls.parse(text, str(p))

    def to_state(self) -> QuantumState:
        """Validated state in the S-T basis after nearest-density projection."""
        m = product_to_st(self.matrix) if self.basis == "product" else self.matrix
        rho, dist = nearest_density_matrix(m)
        log.info("projected state onto density matrices (Frobenius distance %.3g)", dist)
        return QuantumState(rho)

    @classmethod
    def from_state(cls, rho, note: str = "") -> StateFile:
        return cls(np.asarray(rho, dtype=np.complex128), "st", note)

    def to_json(self) -> str:
        d = {"dim": int(self.matrix.shape[0])}
        if self.note:
            d["note"] = self.note
        d["basis"] = self.basis
        d["re"] = self.matrix.real.tolist()
        d["im"] = self.matrix.imag.tolist()
        return json.dumps(d, indent=1)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def load_state(path) -> QuantumState:
    """Load a state file or a bundled fixture name (e.g. ``"ordering_pair_rho1"``)."""
    if str(path) in FIXTURES:
        return fixture(str(path))
    return StateFile.load(path).to_state()


def fixture(name: str) -> QuantumState:
    """A bundled reference matrix, already rotated into the S-T basis."""
    if name not in FIXTURES:
        raise ValidationError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    text = resources.files("blockcoh").joinpath("data", f"{name}.json").read_text()
    return StateFile.parse(text, name).to_state()


def load_projectors(spec: str, dim: int = 4) -> ProjectorSet:
    """Parse ``"st"``, an index partition ``"0|1,2,3"`` or a JSON file of matrices.

    The JSON file holds ``{"projectors": [{"re": ..., "im": ...}, ...]}``.
    """
    p = Path(spec)
    if spec.endswith(".json") or p.is_file():
        try:
            data = json.loads(p.read_text())
            mats = [
                np.asarray(e["re"], float) + 1j * np.asarray(e.get("im", np.zeros_like(e["re"])), float)
                for e in data["projectors"]
            ]
        except (OSError, KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad projector file {spec}: {exc}") from exc
        return ProjectorSet(tuple(mats))
    return ProjectorSet.from_spec(spec, dim)


def format_float(x) -> str:
    return FLOAT_FORMAT % float(x)


def write_csv(path, header, rows, trailer=None) -> None:
    """Write rows with ``%.12g`` floats; ``trailer`` is an optional second table."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else format_float(v) for v in row))
    if trailer is not None:
        t_header, t_rows = trailer
        lines.append("")
        lines.append(",".join(t_header))
        for row in t_rows:
            lines.append(",".join(v if isinstance(v, str) else format_float(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def artifact_version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except ImportError:  # pragma: no cover - not installed
        return "0+unknown"


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to rerun a command: name, parameters, seed, version, outputs."""

    command: str
    params: dict
    seed: int | None
    version: str
    outputs: list

    def to_json(self) -> str:
        d = {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "version": self.version,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "outputs": self.outputs,
        }
        return json.dumps(d, indent=1, sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> RunManifest:
        try:
            d = json.loads(Path(path).read_text())
            return cls(d["command"], d["params"], d.get("seed"), d.get("version", ""), d.get("outputs", []))
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ValidationError(f"bad manifest {path}: {exc}") from exc
