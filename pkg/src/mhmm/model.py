"""Model objects, likelihood recursions, simulation and file formats.

A model couples a first-order latent chain over the joint states of the
latent scheme with a conditional emission table over the joint categories of
the observable scheme. The initial law is the unique invariant distribution
of the transition table, so a model is fully determined by its two tables.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, NumericalError, ParseError
from .schemes import VariableScheme, validate_categories

STOCHASTIC_TOL = 1e-10


@dataclass(frozen=True)
class ObservedSeries:
    """A multivariate categorical time series, rows indexed by time."""

    scheme: VariableScheme
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=int)
        validate_categories(self.scheme, data)
        if data.shape[0] == 0:
            raise DomainError("an observed series needs at least one time point")
        object.__setattr__(self, "data", data)
        self.data.setflags(write=False)

    def __len__(self) -> int:
        return self.data.shape[0]

    @cached_property
    def state_indices(self) -> np.ndarray:
        """Flat joint-state index of each row."""
        return np.array([self.scheme.state_index(tuple(row)) for row in self.data])

    @cached_property
    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(repr(self.scheme.variables).encode())
        digest.update(repr(self.data.shape).encode())
        digest.update(np.ascontiguousarray(self.data).tobytes())
        return digest.hexdigest()


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Invariant law of a row-stochastic matrix.

    Solves the balance equations with a normalization row and verifies the
    result. Strictly positive transition tables have a unique invariant law.
    """
    a = np.asarray(transition, dtype=float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape != (n, n):
        raise DomainError(f"transition table must be square, got {a.shape}")
    a = _check_stochastic("transition", a)
    system = a.T - np.eye(n)
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        raise NumericalError("stationary law solve failed; transition table is singular")
    residual = float(np.max(np.abs(pi @ a - pi)))
    if residual > 1e-10 or np.any(pi < -1e-12):
        raise NumericalError(
            f"invariant law residual {residual:.3e}; chain may be reducible", residual=residual
        )
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _check_stochastic(name: str, table: np.ndarray) -> np.ndarray:
    table = np.asarray(table, dtype=float)
    if np.any(table < 0.0):
        raise DomainError(f"{name} table has negative entries")
    sums = table.sum(axis=-1)
    if np.max(np.abs(sums - 1.0)) > STOCHASTIC_TOL:
        raise DomainError(
            f"{name} table rows must sum to 1 within {STOCHASTIC_TOL:.0e}; "
            f"worst deviation {np.max(np.abs(sums - 1.0)):.3e}"
        )
    return table / sums[..., None]


@dataclass(frozen=True)
class MhmmModel:
    """Joint-state hidden Markov model over categorical schemes."""

    latent_scheme: VariableScheme
    obs_scheme: VariableScheme
    transition: np.ndarray
    emission: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        ne = self.latent_scheme.n_states
        nf = self.obs_scheme.n_states
        transition = _check_stochastic("transition", self.transition)
        emission = _check_stochastic("emission", self.emission)
        if transition.shape != (ne, ne):
            raise DomainError(f"transition shape {transition.shape}, expected {(ne, ne)}")
        if emission.shape != (ne, nf):
            raise DomainError(f"emission shape {emission.shape}, expected {(ne, nf)}")
        initial = np.asarray(self.initial, dtype=float)
        if initial.shape != (ne,):
            raise DomainError(f"initial law shape {initial.shape}, expected {(ne,)}")
        if np.max(np.abs(initial @ transition - initial)) > 1e-8:
            raise DomainError("initial law is not invariant for the transition table")
        initial = np.clip(initial, 0.0, None)
        initial = initial / initial.sum()
        for name, arr in (("transition", transition), ("emission", emission), ("initial", initial)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_tables(
        cls,
        latent_scheme: VariableScheme,
        obs_scheme: VariableScheme,
        transition: np.ndarray,
        emission: np.ndarray,
    ) -> "MhmmModel":
        """Build a model, deriving the initial law from the transition table."""
        transition = _check_stochastic("transition", transition)
        n = latent_scheme.n_states
        if transition.shape != (n, n):
            raise DomainError(f"transition shape {transition.shape}, expected {(n, n)}")
        return cls(
            latent_scheme=latent_scheme,
            obs_scheme=obs_scheme,
            transition=transition,
            emission=emission,
            initial=stationary_distribution(transition),
        )


# -- likelihood recursions ---------------------------------------------------


def _emission_column(model: MhmmModel, series: ObservedSeries) -> np.ndarray:
    """Per-time emission probabilities, shape (T, n_latent_states)."""
    if series.scheme != model.obs_scheme:
        raise DomainError("series scheme does not match the model's observable scheme")
    return model.emission[:, series.state_indices].T


def log_likelihood(model: MhmmModel, series: ObservedSeries) -> float:
    """Log-likelihood by the scaled forward recursion."""
    b = _emission_column(model, series)
    alpha = model.initial * b[0]
    total = 0.0
    scale = alpha.sum()
    if scale <= 0.0:
        raise NumericalError("forward recursion underflowed at time 0")
    alpha /= scale
    total += np.log(scale)
    for t in range(1, len(series)):
        alpha = (alpha @ model.transition) * b[t]
        scale = alpha.sum()
        if scale <= 0.0:
            raise NumericalError(f"forward recursion underflowed at time {t}")
        alpha /= scale
        total += np.log(scale)
    return float(total)


def forward_backward(model: MhmmModel, series: ObservedSeries):
    """Posterior state and pair probabilities.

    Returns (gamma, xi, loglik): gamma[t] is the posterior law of the joint
    latent state at time t, xi[t] the posterior law of the pair (t, t+1).
    Rows of gamma sum to one; xi[t] marginalizes to gamma[t] and gamma[t+1].
    """
    b = _emission_column(model, series)
    T, n = b.shape
    alpha = np.empty((T, n))
    scales = np.empty(T)
    state = model.initial * b[0]
    scales[0] = state.sum()
    if scales[0] <= 0.0:
        raise NumericalError("forward recursion underflowed at time 0")
    alpha[0] = state / scales[0]
    for t in range(1, T):
        state = (alpha[t - 1] @ model.transition) * b[t]
        scales[t] = state.sum()
        if scales[t] <= 0.0:
            raise NumericalError(f"forward recursion underflowed at time {t}")
        alpha[t] = state / scales[t]
    beta = np.empty((T, n))
    beta[-1] = 1.0
    for t in range(T - 2, -1, -1):
        beta[t] = (model.transition @ (b[t + 1] * beta[t + 1])) / scales[t + 1]
    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)
    if T > 1:
        ahead = (b[1:] * beta[1:]) / scales[1:, None]
        xi = alpha[:-1, :, None] * model.transition[None, :, :] * ahead[:, None, :]
        xi /= xi.sum(axis=(1, 2), keepdims=True)
    else:
        xi = np.empty((0, n, n))
    return gamma, xi, float(np.log(scales).sum())


def viterbi(model: MhmmModel, series: ObservedSeries) -> np.ndarray:
    """Most probable joint latent path, ties toward the smallest state index.

    Returns a (T, r) array of 1-based latent categories.
    """
    b = _emission_column(model, series)
    T, n = b.shape
    with np.errstate(divide="ignore"):
        log_a = np.log(model.transition)
        log_b = np.log(b)
        log_pi = np.log(model.initial)
    score = log_pi + log_b[0]
    back = np.zeros((T, n), dtype=int)
    for t in range(1, T):
        candidate = score[:, None] + log_a
        back[t] = np.argmax(candidate, axis=0)
        score = candidate[back[t], np.arange(n)] + log_b[t]
    path = np.empty(T, dtype=int)
    path[-1] = int(np.argmax(score))
    for t in range(T - 2, -1, -1):
        path[t] = back[t + 1][path[t + 1]]
    states = model.latent_scheme.states
    return np.array([states[i] for i in path], dtype=int)


def simulate(model: MhmmModel, length: int, seed: int = 0):
    """Draw a latent path and observations; deterministic for a given seed.

    Returns (latent, series) with latent a (T, r) array of 1-based
    categories and series an ObservedSeries.
    """
    if length < 1:
        raise DomainError(f"series length must be positive, got {length}")
    rng = np.random.default_rng(seed)
    n = model.latent_scheme.n_states
    latent_idx = np.empty(length, dtype=int)
    latent_idx[0] = rng.choice(n, p=model.initial)
    for t in range(1, length):
        latent_idx[t] = rng.choice(n, p=model.transition[latent_idx[t - 1]])
    obs_idx = np.array(
        [rng.choice(model.obs_scheme.n_states, p=model.emission[i]) for i in latent_idx]
    )
    latent_states = model.latent_scheme.states
    obs_states = model.obs_scheme.states
    latent = np.array([latent_states[i] for i in latent_idx], dtype=int)
    observed = np.array([obs_states[i] for i in obs_idx], dtype=int)
    return latent, ObservedSeries(model.obs_scheme, observed)


# -- marginalization -----------------------------------------------------------


def _sub_scheme(scheme: VariableScheme, names) -> VariableScheme:
    keep = set(names)
    return VariableScheme(tuple(v for v in scheme.variables if v[0] in keep))


def _aggregator(scheme: VariableScheme, sub: VariableScheme) -> np.ndarray:
    """0/1 matrix mapping joint states of a scheme onto those of a sub-scheme."""
    positions = [scheme.names.index(n) for n in sub.names]
    out = np.zeros((scheme.n_states, sub.n_states))
    for j, state in enumerate(scheme.states):
        out[j, sub.state_index(tuple(state[i] for i in positions))] = 1.0
    return out


def marginal_model(
    model: MhmmModel,
    latent_subset,
    obs_subset,
    check: bool = True,
    tol: float = 1e-8,
) -> MhmmModel:
    """Model for a sub-process of latent and observable variables.

    The construction averages transition and emission rows over the dropped
    latent variables with stationary weights. The result reproduces the law
    of the sub-process exactly when the retained latent margin evolves
    autonomously and the retained observables depend on it alone; with
    check=True those two constancy conditions are verified within tol.
    """
    sub_latent = _sub_scheme(model.latent_scheme, latent_subset)
    sub_obs = _sub_scheme(model.obs_scheme, obs_subset)
    if sub_latent.size == 0 or sub_obs.size == 0:
        raise DomainError("marginal model needs nonempty latent and observable subsets")
    agg_e = _aggregator(model.latent_scheme, sub_latent)
    agg_f = _aggregator(model.obs_scheme, sub_obs)
    pi = model.initial
    pi_sub = pi @ agg_e
    weights = (pi[:, None] * agg_e) / pi_sub[None, :]
    trans_rows = model.transition @ agg_e
    emit_rows = model.emission @ agg_f
    if check:
        for k in range(sub_latent.n_states):
            members = np.nonzero(agg_e[:, k])[0]
            t_dev = float(np.max(np.abs(trans_rows[members] - trans_rows[members[0]])))
            e_dev = float(np.max(np.abs(emit_rows[members] - emit_rows[members[0]])))
            if t_dev > tol:
                raise DomainError(
                    f"latent margin is not autonomous: transition rows differ by {t_dev:.3e}"
                )
            if e_dev > tol:
                raise DomainError(
                    f"observable margin depends on dropped latents: rows differ by {e_dev:.3e}"
                )
    transition = weights.T @ trans_rows
    emission = weights.T @ emit_rows
    return MhmmModel.from_tables(sub_latent, sub_obs, transition, emission)


def joint_law(model: MhmmModel, steps: int, latent_subset=None, obs_subset=None) -> np.ndarray:
    """Exhaustive joint law of (latent margin, observable margin) over a few
    steps, axes ordered e_0..e_{k-1}, f_0..f_{k-1}. Intended for small cases."""
    lat_names = model.latent_scheme.names if latent_subset is None else tuple(latent_subset)
    obs_names = model.obs_scheme.names if obs_subset is None else tuple(obs_subset)
    sub_latent = _sub_scheme(model.latent_scheme, lat_names)
    sub_obs = _sub_scheme(model.obs_scheme, obs_names)
    agg_e = _aggregator(model.latent_scheme, sub_latent)
    agg_f = _aggregator(model.obs_scheme, sub_obs)
    ne, nf = model.latent_scheme.n_states, model.obs_scheme.n_states
    shape = (sub_latent.n_states,) * steps + (sub_obs.n_states,) * steps
    law = np.zeros(shape)
    for path in itertools.product(range(ne), repeat=steps):
        weight = model.initial[path[0]]
        for a, b in zip(path, path[1:]):
            weight *= model.transition[a, b]
        if weight == 0.0:
            continue
        emit = [model.emission[i] @ agg_f for i in path]
        block = emit[0]
        for e in emit[1:]:
            block = np.multiply.outer(block, e)
        key = tuple(int(np.argmax(agg_e[i])) for i in path)
        law[key] += weight * block
    return law


# -- model files -----------------------------------------------------------------


def write_model(model: MhmmModel) -> str:
    """Serialize a model; probabilities round-trip at 17 significant digits."""
    out = io.StringIO()
    out.write("[variables]\n")
    for name, count in model.latent_scheme.variables:
        out.write(f"latent {name} {count}\n")
    for name, count in model.obs_scheme.variables:
        out.write(f"observed {name} {count}\n")
    e_states = model.latent_scheme.states
    f_states = model.obs_scheme.states
    out.write("[transition]\n")
    for i, prev in enumerate(e_states):
        for j, nxt in enumerate(e_states):
            key = ",".join(map(str, prev + nxt))
            out.write(f"{key} {model.transition[i, j]:.17g}\n")
    out.write("[emission]\n")
    for i, state in enumerate(e_states):
        for j, cats in enumerate(f_states):
            key = ",".join(map(str, state + cats))
            out.write(f"{key} {model.emission[i, j]:.17g}\n")
    out.write("[initial]\n")
    for i, state in enumerate(e_states):
        key = ",".join(map(str, state))
        out.write(f"{key} {model.initial[i]:.17g}\n")
    return out.getvalue()


def read_model(text: str) -> MhmmModel:
    """Parse the flat model format written by write_model."""
    section = None
    latent_vars: list[tuple[str, int]] = []
    obs_vars: list[tuple[str, int]] = []
    body: dict[str, dict[tuple[int, ...], float]] = {
        "transition": {},
        "emission": {},
        "initial": {},
    }
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            name = line.strip("[]").strip()
            if name not in ("variables", "transition", "emission", "initial"):
                raise ParseError(f"line {lineno}: unknown section {name!r}")
            section = name
            continue
        if section == "variables":
            parts = line.split()
            if len(parts) != 3 or parts[0] not in ("latent", "observed"):
                raise ParseError(f"line {lineno}: expected 'latent|observed name count'")
            try:
                count = int(parts[2])
            except ValueError:
                raise ParseError(f"line {lineno}: bad count {parts[2]!r}")
            (latent_vars if parts[0] == "latent" else obs_vars).append((parts[1], count))
        elif section in body:
            try:
                key_text, value_text = line.split()
                key = tuple(int(v) for v in key_text.split(","))
                value = float(value_text)
            except ValueError:
                raise ParseError(f"line {lineno}: expected 'i,j,... probability'")
            body[section][key] = value
        else:
            raise ParseError(f"line {lineno}: content before any section header")
    if not latent_vars or not obs_vars:
        raise ParseError("model file must declare latent and observed variables")
    latent_scheme = VariableScheme(tuple(latent_vars))
    obs_scheme = VariableScheme(tuple(obs_vars))
    ne, nf = latent_scheme.n_states, obs_scheme.n_states
    r = latent_scheme.size
    transition = np.zeros((ne, ne))
    emission = np.zeros((ne, nf))
    initial = np.zeros(ne)
    try:
        for key, value in body["transition"].items():
            transition[
                latent_scheme.state_index(key[:r]), latent_scheme.state_index(key[r:])
            ] = value
        for key, value in body["emission"].items():
            emission[latent_scheme.state_index(key[:r]), obs_scheme.state_index(key[r:])] = value
        for key, value in body["initial"].items():
            initial[latent_scheme.state_index(key)] = value
    except DomainError as exc:
        raise ParseError(f"bad state key in model file: {exc}")
    return MhmmModel(
        latent_scheme=latent_scheme,
        obs_scheme=obs_scheme,
        transition=transition,
        emission=emission,
        initial=initial,
    )


# -- series files -----------------------------------------------------------------


def write_series_csv(series: ObservedSeries) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(series.scheme.names)
    for row in series.data:
        writer.writerow([int(v) for v in row])
    return out.getvalue()


def read_series_csv(text: str, scheme: VariableScheme) -> ObservedSeries:
    """Parse a header-plus-integer-rows CSV against an observable scheme.

    Columns may appear in any order but must match the scheme names exactly.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty series file")
    header = [h.strip() for h in header]
    if sorted(header) != sorted(scheme.names):
        raise ParseError(
            f"series columns {header} do not match observable variables {list(scheme.names)}"
        )
    order = [header.index(name) for name in scheme.names]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            values = [int(row[i]) for i in order]
        except ValueError:
            raise ParseError(f"line {lineno}: categories must be integers")
        rows.append(values)
    if not rows:
        raise ParseError("series file has no data rows")
    return ObservedSeries(scheme, np.array(rows, dtype=int))
