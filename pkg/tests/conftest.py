"""Shared fixtures: the two benchmark spec corpora and small schemes."""

import numpy as np
import pytest

from mhmm import VariableScheme

# Two binary latent chains driving three ternary observables. The eleven
# restricted variants toggle cross-lag edges, emission support, observable
# couplings and invariant-association hypotheses.
PANEL_BASE = """
latent E1 2
latent E2 2
observed F1 3
observed F2 3
observed F3 3
{dir}
bidir E1 <-> E2
{emit}
{obsbd}
{hyp}
"""

FULL_DIR_2 = "dir E1 -> E2\ndir E2 -> E1"
FULL_EMIT_2x3 = "\n".join(f"emit E{i} -> F{j}" for i in (1, 2) for j in (1, 2, 3))
CI_EMIT = "emit E1 -> F1\nemit E2 -> F2\nemit E2 -> F3"
OBS_BD_3 = "bidir F1 <-> F2\nbidir F1 <-> F3\nbidir F2 <-> F3"
TIA = "hypothesis invariant_association transition"
OIA = "hypothesis invariant_association emission"


def panel_text(dir_, emit, obsbd, hyp):
    return PANEL_BASE.format(dir=dir_, emit=emit, obsbd=obsbd, hyp=hyp)


# label -> (spec text, free parameter count)
PANEL_TABLE = {
    "saturated": (panel_text(FULL_DIR_2, FULL_EMIT_2x3, OBS_BD_3, ""), 116),
    "noGranger": (panel_text("", FULL_EMIT_2x3, OBS_BD_3, ""), 112),
    "noGranger+tia": (panel_text("", FULL_EMIT_2x3, OBS_BD_3, TIA), 109),
    "ci": (panel_text(FULL_DIR_2, CI_EMIT, OBS_BD_3, ""), 96),
    "ci+noGranger": (panel_text("", CI_EMIT, OBS_BD_3, ""), 92),
    "ci+noGranger+tia": (panel_text("", CI_EMIT, OBS_BD_3, TIA), 89),
    "ci+ia": (panel_text(FULL_DIR_2, CI_EMIT, OBS_BD_3, OIA), 36),
    "ci+ia+noGranger": (panel_text("", CI_EMIT, OBS_BD_3, OIA), 32),
    "ci+ia+noGranger+tia": (panel_text("", CI_EMIT, OBS_BD_3, OIA + "\n" + TIA), 29),
    "ci+ind": (panel_text(FULL_DIR_2, CI_EMIT, "", ""), 24),
    "ci+ind+noGranger": (panel_text("", CI_EMIT, "", ""), 20),
    "ci+ind+noGranger+tia": (panel_text("", CI_EMIT, "", TIA), 17),
}

# Three binary latent chains, three binary observables.
TRIAD_DECL = """
latent E1 2
latent E2 2
latent E3 2
observed F1 2
observed F2 2
observed F3 2
"""

FULL_DIR_3 = "\n".join(f"dir E{i} -> E{j}" for i in (1, 2, 3) for j in (1, 2, 3) if i != j)
FULL_BIDIR_3 = "bidir E1 <-> E2\nbidir E1 <-> E3\nbidir E2 <-> E3"
FULL_EMIT_3x3 = "\n".join(f"emit E{i} -> F{j}" for i in (1, 2, 3) for j in (1, 2, 3))
OWN_EMIT = "emit E1 -> F1\nemit E2 -> F2\nemit E3 -> F3"
ADD_E = "hypothesis additivity emission"

TRIAD_TABLE = {
    "saturated": (
        TRIAD_DECL + FULL_DIR_3 + "\n" + FULL_BIDIR_3 + "\n" + FULL_EMIT_3x3
        + "\nbidir F1 <-> F2\nbidir F1 <-> F3\nbidir F2 <-> F3",
        112,
    ),
    "linked": (TRIAD_DECL + FULL_BIDIR_3 + "\n" + OWN_EMIT, 32),
    "coupled": (TRIAD_DECL + FULL_DIR_3 + "\n" + OWN_EMIT, 30),
    "shared-driver": (
        TRIAD_DECL + FULL_DIR_3 + "\n"
        + "emit E1 -> F1\nemit E1 -> F2\nemit E1 -> F3\n"
        + "emit E2 -> F1\nemit E2 -> F2\nemit E3 -> F3\n" + ADD_E,
        33,
    ),
    "two-way-additive": (
        TRIAD_DECL + "dir E1 -> E2\ndir E2 -> E1\n" + FULL_EMIT_3x3 + "\n" + ADD_E,
        22,
    ),
    "full-dir-additive": (TRIAD_DECL + FULL_DIR_3 + "\n" + FULL_EMIT_3x3 + "\n" + ADD_E, 36),
}


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)


@pytest.fixture
def small_latent():
    return VariableScheme.of(("E1", 2), ("E2", 2))


@pytest.fixture
def small_obs():
    return VariableScheme.of(("F1", 3), ("F2", 2))
