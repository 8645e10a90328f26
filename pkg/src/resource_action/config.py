import copy
import json
import logging
import os
import re
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from resource_action.errors import ConfigError, ResourceActionError
from resource_action.quantum.qmath import DephasingBasis, HilbertFactorization, get_max_dim
from resource_action.quantum.resources import Bipartition, PotentialKind, PotentialSpec
from resource_action.quantum.statefam import PRESET_STATES, HamiltonianFamily, pauli_string
from resource_action.solver.problem import ActionProblem, KineticTerm, SolverSettings
from resource_action.solver.transcription import MIN_TRANSCRIPTION_NODES
from resource_action.utils.helpers import parse_angle

log = logging.getLogger(__name__)

HOME_ENV = "RESOURCE_ACTION_HOME"
HISTORY_LIMIT = 50


class Config:
    """Application settings persisted between runs."""

    def __init__(self):
        # Determine config file location
        home = os.environ.get(HOME_ENV)
        self.config_dir = Path(home) if home else Path.home() / ".resource_action"
        self.config_file = self.config_dir / "config.json"

        # Default configuration
        self.defaults = {
            "max_dim": 64,
            "log_level": "INFO",
            "csv_float_format": "%.17g",
            "plot_dpi": 300,
            "run_history": [],
        }

        # Load configuration
        self.config = self.load()

    def load(self):
        """Load settings from file, falling back to defaults for missing keys."""
        if not self.config_file.exists():
            return copy.deepcopy(self.defaults)

        try:
            with open(self.config_file, "r") as f:
                config = json.load(f)
            if not isinstance(config, dict):
                raise ValueError("settings file must hold a JSON object")

            # Ensure all default keys exist
            for key, value in self.defaults.items():
                if key not in config:
                    config[key] = copy.deepcopy(value)

            return config
        except (OSError, ValueError) as e:
            log.warning("Error loading settings from %s: %s", self.config_file, e)
            return copy.deepcopy(self.defaults)

    def save(self):
        """Save settings to file."""
        try:
            self.config_dir.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, "w") as f:
                json.dump(self.config, f, indent=2)
        except OSError as e:
            log.warning("Error saving settings to %s: %s", self.config_file, e)

    def get(self, key, default=None):
        """Get a settings value."""
        return self.config.get(key, default)

    def set(self, key, value):
        """Set a settings value."""
        self.config[key] = value
        self.save()

    def add_run_history(self, entry):
        """Record a finished run, newest first."""
        entry = dict(entry)
        entry.setdefault("time", datetime.now(timezone.utc).isoformat(timespec="seconds"))

        history = self.config.get("run_history", [])
        history.insert(0, entry)

        # Limit to the most recent runs
        self.config["run_history"] = history[:HISTORY_LIMIT]
        self.save()

    def get_run_history(self):
        """Get the run history."""
        return self.config.get("run_history", [])


# --- Problem configuration ---

TOP_LEVEL_KEYS = {
    "description",
    "dimension",
    "generators",
    "reference_state",
    "kinetic",
    "potential",
    "bipartition",
    "dephasing_basis",
    "boundary",
    "solver",
}
REQUIRED_KEYS = ("dimension", "generators", "reference_state", "kinetic", "potential", "boundary")
BOUNDARY_KEYS = ("lambda_A", "lambda_B")
SOLVER_KEYS = tuple(f.name for f in fields(SolverSettings))

_PATH_TOKEN = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)|\[(\d+)\]")


def _complex_entry(value, where):
    """A complex number given as a real number or an [re, im] pair."""
    if isinstance(value, bool):
        raise ConfigError(where, f"expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            return complex(parse_angle(value[0]), parse_angle(value[1]))
        except ValueError as e:
            raise ConfigError(where, str(e)) from e
    raise ConfigError(where, f"expected a number or [re, im], got {value!r}")


def _complex_matrix(rows, where):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError(where, "expected a row-major list of rows")
    size = len(rows)
    if any(len(r) != size for r in rows):
        raise ConfigError(where, f"matrix must be square, got {size} rows of lengths {[len(r) for r in rows]}")
    return np.array(
        [[_complex_entry(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]
    )


def _angle(value, where):
    try:
        return parse_angle(value)
    except ValueError as e:
        raise ConfigError(where, str(e)) from e


@dataclass
class ProblemConfig:
    """
    A validated problem configuration document.

    Fields hold the document's own values (angle expressions stay strings)
    so that ``to_dict`` echoes what was read; ``build_problem`` and
    ``settings`` turn them into solver objects.
    """

    dimension: list
    generators: list
    reference_state: object
    kinetic: str
    potential: str
    boundary: dict
    bipartition: list = None
    dephasing_basis: object = "computational"
    solver: dict = field(default_factory=dict)
    description: str = ""

    @classmethod
    def from_dict(cls, data):
        """
        Validate a configuration document.

        Raises:
            ConfigError: With the dotted path of the first offending field.
        """
        if not isinstance(data, dict):
            raise ConfigError("", "configuration must be a JSON object")
        unknown = sorted(set(data) - TOP_LEVEL_KEYS)
        if unknown:
            raise ConfigError(unknown[0], "unknown key")
        for key in REQUIRED_KEYS:
            if key not in data:
                raise ConfigError(key, "missing required key")

        config = cls(
            dimension=copy.deepcopy(data["dimension"]),
            generators=copy.deepcopy(data["generators"]),
            reference_state=copy.deepcopy(data["reference_state"]),
            kinetic=data["kinetic"],
            potential=data["potential"],
            boundary=copy.deepcopy(data["boundary"]),
            bipartition=copy.deepcopy(data.get("bipartition")),
            dephasing_basis=copy.deepcopy(data.get("dephasing_basis", "computational")),
            solver=copy.deepcopy(data.get("solver", {})),
            description=data.get("description", ""),
        )
        config.validate()
        return config

    @classmethod
    def load(cls, path):
        """
        Read and validate a configuration file.

        Raises:
            ConfigError: If the file is unreadable, not JSON, or invalid.
        """
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError("", f"cannot read configuration {path}.\nDetails: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError("", f"configuration {path} is not valid JSON.\nDetails: {e}") from e
        return cls.from_dict(data)

    def to_dict(self):
        data = {
            "dimension": self.dimension,
            "generators": self.generators,
            "reference_state": self.reference_state,
            "kinetic": self.kinetic,
            "potential": self.potential,
            "bipartition": self.bipartition,
            "dephasing_basis": self.dephasing_basis,
            "boundary": self.boundary,
            "solver": self.solver,
        }
        if self.description:
            data["description"] = self.description
        return copy.deepcopy(data)

    # --- Validation ---

    def validate(self):
        """Build every derived object once so errors surface at load time."""
        self.settings()
        self.build_problem()

    def factorization(self):
        dims = self.dimension
        if not isinstance(dims, list) or not dims:
            raise ConfigError("dimension", "expected a non-empty list of local dimensions")
        for i, d in enumerate(dims):
            if isinstance(d, bool) or not isinstance(d, int) or d < 1:
                raise ConfigError(f"dimension[{i}]", f"expected a positive integer, got {d!r}")
        total = int(np.prod(dims))
        if total > get_max_dim():
            raise ConfigError("dimension", f"total dimension {total} exceeds the dense maximum {get_max_dim()}")
        return HilbertFactorization(tuple(dims))

    def _generator_matrices(self, fact):
        if not isinstance(self.generators, list) or not self.generators:
            raise ConfigError("generators", "expected a non-empty list")
        matrices = []
        for i, item in enumerate(self.generators):
            where = f"generators[{i}]"
            if not isinstance(item, dict) or len(item) != 1 or next(iter(item)) not in ("pauli", "dense"):
                raise ConfigError(where, "expected {\"pauli\": ...} or {\"dense\": ...}")
            if "pauli" in item:
                label = item["pauli"]
                if not isinstance(label, str):
                    raise ConfigError(f"{where}.pauli", "expected a string")
                if set(fact.subsystem_dims) != {2}:
                    raise ConfigError(f"{where}.pauli", "Pauli strings need every subsystem to be a qubit")
                if len(label) != fact.n_subsystems:
                    raise ConfigError(
                        f"{where}.pauli",
                        f"length {len(label)} does not match {fact.n_subsystems} qubits",
                    )
                try:
                    matrices.append(pauli_string(label))
                except ValueError as e:
                    raise ConfigError(f"{where}.pauli", str(e)) from e
            else:
                matrix = _complex_matrix(item["dense"], f"{where}.dense")
                if matrix.shape[0] != fact.dim:
                    raise ConfigError(f"{where}.dense", f"expected a {fact.dim}×{fact.dim} matrix")
                matrices.append(matrix)
        return np.stack(matrices)

    def _reference_vector(self, fact):
        state = self.reference_state
        if isinstance(state, str):
            if state not in PRESET_STATES:
                raise ConfigError("reference_state", f"unknown preset {state!r}; known: {sorted(PRESET_STATES)}")
            vector = PRESET_STATES[state]
        elif isinstance(state, list):
            vector = np.array([_complex_entry(v, f"reference_state[{i}]") for i, v in enumerate(state)])
        else:
            raise ConfigError("reference_state", "expected a preset name or an amplitude list")
        if vector.shape[0] != fact.dim:
            raise ConfigError("reference_state", f"expected {fact.dim} amplitudes, got {vector.shape[0]}")
        norm = np.linalg.norm(vector)
        if abs(norm - 1.0) > 1e-8:
            raise ConfigError("reference_state", f"amplitudes are not normalized (norm {norm:.12f})")
        return vector / norm

    def family(self):
        fact = self.factorization()
        try:
            return HamiltonianFamily(self._generator_matrices(fact), self._reference_vector(fact), fact)
        except ResourceActionError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError("generators", str(e)) from e

    def potential_spec(self):
        fact = self.factorization()
        try:
            kind = PotentialKind(self.potential)
        except ValueError as e:
            raise ConfigError("potential", f"expected one of {[k.value for k in PotentialKind]}") from e

        bipartition = None
        keep = self.bipartition
        if keep is None and fact.n_subsystems > 1:
            keep = [0]
        if keep is not None:
            if not isinstance(keep, list) or any(isinstance(k, bool) or not isinstance(k, int) for k in keep):
                raise ConfigError("bipartition", "expected a list of subsystem indices")
            try:
                bipartition = Bipartition(fact, tuple(keep))
            except ResourceActionError as e:
                raise ConfigError("bipartition", str(e)) from e

        basis_field = self.dephasing_basis
        if basis_field == "computational":
            basis = DephasingBasis.computational(fact.dim)
        elif isinstance(basis_field, list) and basis_field:
            projectors = [_complex_matrix(p, f"dephasing_basis[{i}]") for i, p in enumerate(basis_field)]
            if any(p.shape != projectors[0].shape for p in projectors):
                raise ConfigError("dephasing_basis", "projectors must share one dimension")
            try:
                basis = DephasingBasis(np.stack(projectors))
            except ResourceActionError as e:
                raise ConfigError("dephasing_basis", str(e)) from e
        else:
            raise ConfigError("dephasing_basis", "expected \"computational\" or a list of projectors")

        try:
            return PotentialSpec(kind, bipartition, basis)
        except ResourceActionError as e:
            field_name = "dephasing_basis" if kind is PotentialKind.COHERENCE else "bipartition"
            raise ConfigError(field_name, str(e)) from e

    def endpoints(self):
        if not isinstance(self.boundary, dict):
            raise ConfigError("boundary", "expected an object with lambda_A and lambda_B")
        unknown = sorted(set(self.boundary) - set(BOUNDARY_KEYS))
        if unknown:
            raise ConfigError(f"boundary.{unknown[0]}", "unknown key")
        n_params = len(self.generators)
        points = []
        for key in BOUNDARY_KEYS:
            values = self.boundary.get(key)
            if not isinstance(values, list):
                raise ConfigError(f"boundary.{key}", "expected a list")
            if len(values) != n_params:
                raise ConfigError(f"boundary.{key}", f"expected {n_params} entries, got {len(values)}")
            points.append(np.array([_angle(v, f"boundary.{key}[{i}]") for i, v in enumerate(values)]))
        return points[0], points[1]

    def settings(self):
        if not isinstance(self.solver, dict):
            raise ConfigError("solver", "expected an object")
        unknown = sorted(set(self.solver) - set(SOLVER_KEYS))
        if unknown:
            raise ConfigError(f"solver.{unknown[0]}", "unknown key")
        settings = SolverSettings(**self.solver)
        if settings.method == "transcription" and (
            settings.grid_n < MIN_TRANSCRIPTION_NODES or settings.grid_n % 2
        ):
            raise ConfigError(
                "solver.grid_n",
                f"transcription needs an even grid of at least {MIN_TRANSCRIPTION_NODES} intervals, got {settings.grid_n}",
            )
        return settings

    def build_problem(self):
        """
        Returns:
            ActionProblem: The problem this document describes.
        """
        try:
            kinetic = KineticTerm(self.kinetic)
        except ValueError as e:
            raise ConfigError("kinetic", f"expected 'K1' or 'K2', got {self.kinetic!r}") from e
        lambda_A, lambda_B = self.endpoints()
        return ActionProblem(self.family(), kinetic, self.potential_spec(), lambda_A, lambda_B)

    # --- Overrides ---

    def with_override(self, parameter, value):
        """
        Copy of this configuration with one scalar field replaced.

        ``parameter`` is a dotted path such as ``solver.grid_n``,
        ``potential`` or ``boundary.lambda_B[1]``.

        Raises:
            ConfigError: If the path does not name an existing scalar field,
                or the new document is invalid.
        """
        data = self.to_dict()
        tokens = []
        for part in parameter.split("."):
            matches = list(_PATH_TOKEN.finditer(part))
            if not matches or "".join(m.group(0) for m in matches) != part:
                raise ConfigError(parameter, "malformed parameter path")
            tokens.extend(m.group(1) if m.group(1) else int(m.group(2)) for m in matches)

        target = data
        for i, token in enumerate(tokens[:-1]):
            target = self._step(target, token, parameter, create=(i == 0 and token == "solver"))
        last = tokens[-1]
        if isinstance(target, dict):
            if target is data:
                allowed = TOP_LEVEL_KEYS
            elif target is data.get("solver"):
                allowed = SOLVER_KEYS
            else:
                allowed = target.keys()
            if last not in allowed:
                raise ConfigError(parameter, "unknown parameter")
            current = target.get(last)
        else:
            if not isinstance(last, int) or last >= len(target):
                raise ConfigError(parameter, "index out of range")
            current = target[last]
        if isinstance(current, (dict, list)):
            raise ConfigError(parameter, "does not name a scalar field")
        target[last] = value
        return ProblemConfig.from_dict(data)

    @staticmethod
    def _step(target, token, parameter, create=False):
        if isinstance(target, dict) and isinstance(token, str):
            if token not in target:
                if not create:
                    raise ConfigError(parameter, "unknown parameter")
                target[token] = {}
            return target[token]
        if isinstance(target, list) and isinstance(token, int) and token < len(target):
            return target[token]
        raise ConfigError(parameter, "unknown parameter")

    def with_overrides(self, overrides):
        config = self
        for parameter, value in (overrides or {}).items():
            config = config.with_override(parameter, value)
        return config
