"""Experiment configuration: YAML parsing, validation, and assembly of the
model/coefficient/grid objects the pipelines consume.

Validation errors carry the dotted path of the offending field so the CLI
can point at the exact line of a config.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .coeffs import (
    Bump,
    CoefficientProfile,
    SumCoefficient,
    TabulatedCoefficient,
    TransformedCoefficients,
    from_y_form,
    transform_to_y,
)
from .errors import ConfigError
from .grid import Grid
from .model import KinkS, Potential, builtin_phi4, builtin_sine_gordon, polynomial_potential, solve_constant_kink

BUILTINS = {"phi4": builtin_phi4, "sine_gordon": builtin_sine_gordon}


def _expect(cond: bool, path: str, msg: str):
    if not cond:
        raise ConfigError(path, msg)


def _get(d: dict, key: str, default=None):
    return d.get(key, default) if isinstance(d, dict) else default


@dataclass
class ExperimentConfig:
    """Parsed and validated experiment description."""

    raw: dict
    pot: Potential
    kink: KinkS
    grid: Grid
    tc: TransformedCoefficients
    delta: float
    seed: int
    tolerances: dict[str, float]
    spectrum: dict
    drift: dict
    resonance: dict
    simulate: dict
    validate: dict

    @property
    def model_name(self) -> str:
        return self.pot.name


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError("<file>", f"not valid YAML: {e}")
    if not isinstance(raw, dict):
        raise ConfigError("<file>", "top level must be a mapping")
    return parse_config(raw, base_dir=Path(path).parent)


def parse_config(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    # --- grid ---
    gconf = _get(raw, "grid", {}) or {}
    L = _get(gconf, "L", 30.0)
    N = _get(gconf, "N", 4096)
    _expect(isinstance(L, (int, float)) and L > 0, "grid.L", f"must be positive, got {L!r}")
    _expect(
        isinstance(N, int) and N >= 1024 and (N & (N - 1)) == 0,
        "grid.N",
        f"must be a power of two >= 1024, got {N!r}",
    )
    grid = Grid(float(L), int(N))

    # --- model ---
    mconf = _get(raw, "model", {}) or {}
    if "builtin" in mconf:
        name = mconf["builtin"]
        _expect(name in BUILTINS, "model.builtin", f"unknown model {name!r}; choices: {sorted(BUILTINS)}")
        pot, kink = BUILTINS[name]()
    elif "polynomial" in mconf:
        pconf = mconf["polynomial"]
        coeffs = _get(pconf, "coefficients")
        vacua = _get(pconf, "vacua")
        _expect(isinstance(coeffs, list) and len(coeffs) >= 3, "model.polynomial.coefficients",
                "need an ascending coefficient list")
        _expect(isinstance(vacua, list) and len(vacua) == 2, "model.polynomial.vacua",
                "need [a_minus, a_plus]")
        try:
            pot = polynomial_potential(coeffs, (float(vacua[0]), float(vacua[1])))
        except Exception as e:
            raise ConfigError("model.polynomial", str(e))
        kink = solve_constant_kink(pot, grid)
    else:
        raise ConfigError("model", "need either 'builtin' or 'polynomial'")

    # --- coefficients ---
    cconf = _get(raw, "coefficients", {}) or {}
    variable = _get(cconf, "variable", "y")
    _expect(variable in ("x", "y"), "coefficients.variable", "must be 'x' or 'y'")
    delta = float(_get(cconf, "delta", 0.0) or 0.0)
    b_co = _parse_coefficient(_get(cconf, "b", []), "coefficients.b", base_dir)
    c_co = _parse_coefficient(_get(cconf, "c", []), "coefficients.c", base_dir)
    if variable == "y":
        _expect(not _get(cconf, "a"), "coefficients.a",
                "second-order coefficient requires variable: x")
        tc = from_y_form(b_co, c_co, grid, delta=delta or None)
    else:
        a_co = _parse_coefficient(_get(cconf, "a", []), "coefficients.a", base_dir)
        profile = CoefficientProfile(
            a=lambda x: 1.0 + a_co(x),
            da=a_co.deriv,
            b=b_co,
            c=c_co,
        )
        tc = transform_to_y(profile, grid, delta=delta or None)

    # --- tolerances ---
    tconf = _get(raw, "tolerances", {}) or {}
    tolerances = {"kink": 1e-12, "root": 1e-12}
    for key, val in tconf.items():
        _expect(isinstance(val, (int, float)) and val > 0, f"tolerances.{key}",
                f"must be positive, got {val!r}")
        tolerances[key] = float(val)

    seed = _get(raw, "seed", 0)
    _expect(isinstance(seed, int), "seed", "must be an integer")

    spectrum = _get(raw, "spectrum", {}) or {}
    if "n_scan" in spectrum:
        _expect(isinstance(spectrum["n_scan"], int) and spectrum["n_scan"] >= 16,
                "spectrum.n_scan", "must be an integer >= 16")

    simulate = _get(raw, "simulate", {}) or {}
    if simulate:
        t_end = _get(simulate, "t_end", 100.0)
        _expect(t_end > 0, "simulate.t_end", "must be positive")
        sg = _get(simulate, "grid", {}) or {}
        sL = _get(sg, "L", max(2.0 * grid.L, t_end + 20.0))
        sN = _get(sg, "N", 8192)
        _expect(sL > 0, "simulate.grid.L", "must be positive")
        _expect(isinstance(sN, int) and sN >= 1024 and (sN & (sN - 1)) == 0,
                "simulate.grid.N", "must be a power of two >= 1024")
        pconf = _get(simulate, "perturbation", {}) or {}
        kind = _get(pconf, "kind", "sech")
        _expect(kind in ("sech", "random", "none"), "simulate.perturbation.kind",
                f"unknown kind {kind!r}")
        y0 = abs(_get(pconf, "center", 0.0)) + 4.0 * _get(pconf, "width", 1.0) + (
            _get(pconf, "window", 8.0) * 2.0 if kind == "random" else 0.0
        )
        _expect(
            t_end <= sL - y0,
            "simulate.t_end",
            f"must stay below L - y0 = {sL - y0:.1f} so wall reflections cannot "
            "contaminate the distance records",
        )

    return ExperimentConfig(
        raw=raw,
        pot=pot,
        kink=kink,
        grid=grid,
        tc=tc,
        delta=delta,
        seed=int(seed),
        tolerances=tolerances,
        spectrum=spectrum,
        drift=_get(raw, "drift", {}) or {},
        resonance=_get(raw, "resonance", {}) or {},
        simulate=simulate,
        validate=_get(raw, "validate", {}) or {},
    )


def _parse_coefficient(entries, path: str, base_dir: Path | None):
    if entries in (None, [], {}):
        return SumCoefficient(())
    _expect(isinstance(entries, list), path, "must be a list of bump/file entries")
    terms = []
    tabulated = []
    for i, e in enumerate(entries):
        p = f"{path}[{i}]"
        _expect(isinstance(e, dict), p, "must be a mapping")
        if "file" in e:
            fp = Path(e["file"])
            if base_dir is not None and not fp.is_absolute():
                fp = base_dir / fp
            _expect(fp.exists(), f"{p}.file", f"no such file: {fp}")
            data = np.loadtxt(fp, delimiter=",")
            _expect(data.ndim == 2 and data.shape[1] == 2, f"{p}.file",
                    "expected two comma-separated columns (position, value)")
            tabulated.append(TabulatedCoefficient(data[:, 0], data[:, 1]))
            continue
        fam = _get(e, "family")
        _expect(fam in ("gaussian", "sech2", "exp"), f"{p}.family",
                f"unknown family {fam!r}")
        amp = _get(e, "amplitude")
        _expect(isinstance(amp, (int, float)), f"{p}.amplitude", "must be a number")
        width = _get(e, "width", 1.0)
        _expect(isinstance(width, (int, float)) and width > 0, f"{p}.width",
                "must be positive")
        terms.append(Bump(fam, float(amp), float(width), float(_get(e, "center", 0.0))))
    if tabulated and not terms:
        return tabulated[0] if len(tabulated) == 1 else _SumMixed(tabulated)
    if tabulated:
        return _SumMixed(terms + tabulated)
    return SumCoefficient(terms)


class _SumMixed:
    """Sum of heterogeneous coefficient terms (bumps and tables)."""

    def __init__(self, terms):
        self.terms = list(terms)

    def __call__(self, y):
        out = np.zeros_like(np.asarray(y, dtype=float))
        for t in self.terms:
            out = out + t(y)
        return out

    def deriv(self, y):
        out = np.zeros_like(np.asarray(y, dtype=float))
        for t in self.terms:
            out = out + t.deriv(y)
        return out

    def antiderivative(self, y):
        out = np.zeros_like(np.asarray(y, dtype=float))
        for t in self.terms:
            out = out + t.antiderivative(y)
        return out
