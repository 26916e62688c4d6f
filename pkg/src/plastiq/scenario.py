"""Scenario files: versioned JSON configuration for 2D runs.

Unknown keys are rejected at every nesting level so typos fail loudly;
numeric parameters are validated by the objects they configure.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .discretization import Mesh, unit_square
from .dissipation import DissipationModel
from .energy import DensitySpec, EnergyModel, Loading
from .errors import ScenarioError
from .solver import ModelSet, SolverConfig, TimeGrid

_SCHEMA_VERSION = 1

_TOP_KEYS = {"schema", "seed", "mesh", "energy", "dissipation", "loading",
             "time", "solver", "verify", "output", "initial"}
_MESH_KEYS = {"kind", "n", "dirichlet", "path"}
_ENERGY_KEYS = {"q_e", "q_p", "growth_constant", "dirichlet_weight",
                "lipschitz_cap", "elastic", "plastic"}
_DENSITY_KEYS = {"name", "params"}
_DISS_KEYS = {"yield_scale", "density_kind"}
_LOAD_KEYS = {"body", "traction"}
_FORCE_KEYS = {"kind", "vector", "knots", "scales"}
_TIME_KEYS = {"T", "knots"}
_SOLVER_KEYS = {"max_outer_iterations", "alternation_rounds", "step_init",
                "step_floor", "det_tolerance", "perturbation_count", "seed",
                "plastic_step_init", "plastic_step_floor", "plastic_trials",
                "check_initial_semistability", "energy_ceiling"}
_VERIFY_KEYS = {"semistability", "energy_inequality", "stability", "bound",
                "competitors"}
_OUTPUT_KEYS = {"csv", "json"}


def _check_keys(section, allowed, where):
    unknown = set(section) - allowed
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in {where}")


@dataclass
class Scenario:
    """Parsed scenario: everything needed to run and verify a 2D solve."""

    seed: int
    mesh: Mesh
    models: ModelSet
    grid: TimeGrid
    solver: SolverConfig
    verify_options: dict
    output_csv: str | None
    output_json: str | None
    initial: str = "reference"

    def initial_state(self):
        """Build the configured initial state ("reference" or "relaxed")."""
        from .discretization import reference_state
        from .solver import relax_initial_state

        if self.initial == "relaxed":
            return relax_initial_state(self.mesh, self.models, self.solver)
        return reference_state(self.mesh)

    @classmethod
    def from_file(cls, path):
        if not os.path.exists(path):
            raise ScenarioError(f"scenario file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(
                    f"malformed JSON in {path} at line {exc.lineno} column {exc.colno}: "
                    f"{exc.msg}"
                )
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    @classmethod
    def from_dict(cls, data, base_dir="."):
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a JSON object")
        _check_keys(data, _TOP_KEYS, "scenario")
        if data.get("schema") != _SCHEMA_VERSION:
            raise ScenarioError(
                f"scenario schema must be {_SCHEMA_VERSION}, got {data.get('schema')!r}"
            )
        seed = int(data.get("seed", 0))

        mesh = cls._build_mesh(data.get("mesh", {}), base_dir)
        energy = cls._build_energy(data.get("energy", {}))
        dissipation = cls._build_dissipation(data.get("dissipation", {}))
        time_section = dict(data.get("time", {}))
        _check_keys(time_section, _TIME_KEYS, "time")
        horizon = float(time_section.get("T", 1.0))
        n_knots = int(time_section.get("knots", 20))
        if horizon <= 0:
            raise ScenarioError("time.T must be positive")
        grid = TimeGrid.uniform(horizon, n_knots)
        loading = cls._build_loading(data.get("loading", {}), mesh, horizon)

        solver_section = dict(data.get("solver", {}))
        _check_keys(solver_section, _SOLVER_KEYS, "solver")
        solver_section.setdefault("seed", seed)
        try:
            solver = SolverConfig(**solver_section)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"bad solver config: {exc}")

        verify_section = dict(data.get("verify", {}))
        _check_keys(verify_section, _VERIFY_KEYS, "verify")
        verify_options = {
            "semistability": bool(verify_section.get("semistability", True)),
            "energy_inequality": bool(verify_section.get("energy_inequality", True)),
            "stability": bool(verify_section.get("stability", False)),
            "bound": bool(verify_section.get("bound", True)),
            "competitors": int(verify_section.get("competitors", 50)),
        }

        output = dict(data.get("output", {}))
        _check_keys(output, _OUTPUT_KEYS, "output")

        initial = data.get("initial", "reference")
        if initial not in ("reference", "relaxed"):
            raise ScenarioError(
                f"initial must be 'reference' or 'relaxed', got {initial!r}"
            )

        return cls(
            seed=seed,
            mesh=mesh,
            models=ModelSet(energy, loading, dissipation),
            grid=grid,
            solver=solver,
            verify_options=verify_options,
            output_csv=output.get("csv"),
            output_json=output.get("json"),
            initial=initial,
        )

    @staticmethod
    def _build_mesh(section, base_dir):
        _check_keys(section, _MESH_KEYS, "mesh")
        kind = section.get("kind", "unit_square")
        if kind == "unit_square":
            try:
                return unit_square(
                    int(section.get("n", 4)), dirichlet=section.get("dirichlet", "all")
                )
            except ValueError as exc:
                raise ScenarioError(f"bad mesh: {exc}")
        if kind == "file":
            path = section.get("path")
            if not path:
                raise ScenarioError("mesh.kind 'file' needs mesh.path")
            full = path if os.path.isabs(path) else os.path.join(base_dir, path)
            if not os.path.exists(full):
                raise ScenarioError(f"mesh file not found: {full}")
            return Mesh.load(full)
        raise ScenarioError(f"unknown mesh.kind {kind!r}")

    @staticmethod
    def _build_energy(section):
        _check_keys(section, _ENERGY_KEYS, "energy")

        def density(sub, default_exponent):
            if sub is None:
                return DensitySpec("quartic-polyconvex", {"exponent": default_exponent})
            _check_keys(sub, _DENSITY_KEYS, "energy density")
            return DensitySpec(sub.get("name", "quartic-polyconvex"),
                               dict(sub.get("params", {})))

        q_e = float(section.get("q_e", 4.0))
        q_p = float(section.get("q_p", 4.0))
        try:
            return EnergyModel(
                q_e=q_e,
                q_p=q_p,
                elastic=density(section.get("elastic"), q_e),
                plastic=density(section.get("plastic"), q_p),
                growth_constant=float(section.get("growth_constant", 0.125)),
                dirichlet_weight=float(section.get("dirichlet_weight", 1.0)),
                lipschitz_cap=(
                    float(section["lipschitz_cap"])
                    if section.get("lipschitz_cap") is not None
                    else None
                ),
            )
        except ValueError as exc:
            raise ScenarioError(f"bad energy model: {exc}")

    @staticmethod
    def _build_dissipation(section):
        _check_keys(section, _DISS_KEYS, "dissipation")
        try:
            return DissipationModel(
                yield_scale=float(section.get("yield_scale", 1.0)),
                density_kind=section.get("density_kind", "log-singular-values"),
            )
        except ValueError as exc:
            raise ScenarioError(f"bad dissipation model: {exc}")

    @staticmethod
    def _build_loading(section, mesh, horizon):
        _check_keys(section, _LOAD_KEYS, "loading")

        def force(sub, where):
            if sub is None:
                return None
            _check_keys(sub, _FORCE_KEYS, where)
            kind = sub.get("kind", "zero")
            vector = np.asarray(sub.get("vector", [0.0, 0.0]), dtype=float)
            if vector.shape != (2,):
                raise ScenarioError(f"{where}.vector must be a 2-vector")
            if kind == "zero":
                return ("piecewise", [0.0, horizon], [0.0, 0.0], vector)
            if kind == "constant":
                return ("piecewise", [0.0, horizon], [1.0, 1.0], vector)
            if kind == "ramp":
                return ("piecewise", [0.0, horizon], [0.0, horizon], vector)
            if kind == "piecewise":
                knots = [float(v) for v in sub.get("knots", [0.0, horizon])]
                scales = [float(v) for v in sub.get("scales", [0.0] * len(knots))]
                if len(knots) != len(scales):
                    raise ScenarioError(f"{where}: knots and scales lengths differ")
                return ("piecewise", knots, scales, vector)
            raise ScenarioError(f"unknown {where}.kind {kind!r}")

        body = force(section.get("body"), "loading.body")
        trac = force(section.get("traction"), "loading.traction")
        if body is None and trac is None:
            return Loading.zero(mesh, horizon)
        if body is not None and trac is not None and body[1] != trac[1]:
            raise ScenarioError("body and traction time knots must agree")
        knots = np.asarray(body[1] if body is not None else trac[1], dtype=float)
        n = len(mesh.nodes)

        def samples(spec):
            if spec is None:
                return np.zeros((len(knots), n, 2))
            scales = np.asarray(spec[2], dtype=float)
            return scales[:, None, None] * spec[3][None, None, :] * np.ones((1, n, 1))

        return Loading(knots, samples(body), samples(trac), mesh)
