"""Print free-parameter counts for two ladders of graphical hypotheses.

Each model is a plain-text declaration; the script compiles its constraint
set and reports par, df against the saturated model, and the per-family
tally of zeroed coordinates.
"""

from mhmm import count_free_parameters, parse_model_spec, total_parameter_count

PANEL_BASE = """\
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

FULL_DIR = "dir E1 -> E2\ndir E2 -> E1"
FULL_EMIT = "\n".join(f"emit E{i} -> F{j}" for i in (1, 2) for j in (1, 2, 3))
CI_EMIT = "emit E1 -> F1\nemit E2 -> F2\nemit E2 -> F3"
OBS_BD = "bidir F1 <-> F2\nbidir F1 <-> F3\nbidir F2 <-> F3"
TIA = "hypothesis invariant_association transition"
OIA = "hypothesis invariant_association emission"

PANEL_MODELS = [
    ("saturated", FULL_DIR, FULL_EMIT, OBS_BD, ""),
    ("noGranger", "", FULL_EMIT, OBS_BD, ""),
    ("noGranger+tia", "", FULL_EMIT, OBS_BD, TIA),
    ("ci", FULL_DIR, CI_EMIT, OBS_BD, ""),
    ("ci+noGranger", "", CI_EMIT, OBS_BD, ""),
    ("ci+noGranger+tia", "", CI_EMIT, OBS_BD, TIA),
    ("ci+ia", FULL_DIR, CI_EMIT, OBS_BD, OIA),
    ("ci+ia+noGranger", "", CI_EMIT, OBS_BD, OIA),
    ("ci+ia+noGranger+tia", "", CI_EMIT, OBS_BD, OIA + "\n" + TIA),
    ("ci+ind", FULL_DIR, CI_EMIT, "", ""),
    ("ci+ind+noGranger", "", CI_EMIT, "", ""),
    ("ci+ind+noGranger+tia", "", CI_EMIT, "", TIA),
]

TRIAD_DECL = """\
latent E1 2
latent E2 2
latent E3 2
observed F1 2
observed F2 2
observed F3 2
"""

E_FULL_DIR = "\n".join(
    f"dir E{i} -> E{j}" for i in (1, 2, 3) for j in (1, 2, 3) if i != j
)
E_FULL_BIDIR = "bidir E1 <-> E2\nbidir E1 <-> E3\nbidir E2 <-> E3"
E_FULL_EMIT = "\n".join(f"emit E{i} -> F{j}" for i in (1, 2, 3) for j in (1, 2, 3))
E_OBS_BD = "bidir F1 <-> F2\nbidir F1 <-> F3\nbidir F2 <-> F3"
OWN_EMIT = "emit E1 -> F1\nemit E2 -> F2\nemit E3 -> F3"
ADD_E = "hypothesis additivity emission"

# absent observable bidir lines leave the local zeros in force
TRIAD_MODELS = [
    (
        "saturated",
        TRIAD_DECL + E_FULL_DIR + "\n" + E_FULL_BIDIR + "\n" + E_FULL_EMIT + "\n" + E_OBS_BD,
    ),
    ("linked", TRIAD_DECL + E_FULL_BIDIR + "\n" + OWN_EMIT),
    ("coupled", TRIAD_DECL + E_FULL_DIR + "\n" + OWN_EMIT),
    (
        "shared-driver",
        TRIAD_DECL + E_FULL_DIR + "\n"
        + "emit E1 -> F1\nemit E1 -> F2\nemit E1 -> F3\n"
        + "emit E2 -> F1\nemit E2 -> F2\nemit E3 -> F3\n" + ADD_E,
    ),
    (
        "two-way-additive",
        TRIAD_DECL + "dir E1 -> E2\ndir E2 -> E1\n" + E_FULL_EMIT + "\n" + ADD_E,
    ),
    ("full-dir-additive", TRIAD_DECL + E_FULL_DIR + "\n" + E_FULL_EMIT + "\n" + ADD_E),
]


def print_table(title, rows):
    print(title)
    saturated_par = None
    print(f"{'model':<22}{'par':>5}{'df':>5}  zeroed by family")
    for label, text in rows:
        spec = parse_model_spec(text, label=label)
        cs = spec.compile()
        par = count_free_parameters(spec.latent_scheme, spec.obs_scheme, cs)
        if saturated_par is None:
            saturated_par = total_parameter_count(spec.latent_scheme, spec.obs_scheme)
        families = ", ".join(f"{k} {v}" for k, v in sorted(cs.family_counts().items()))
        print(f"{label:<22}{par:>5}{saturated_par - par:>5}  {families or '-'}")
    print()


def main():
    panel = [
        (label, PANEL_BASE.format(dir=d, emit=e, obsbd=o, hyp=h))
        for label, d, e, o, h in PANEL_MODELS
    ]
    print_table("panel ladder (2 binary latents, 3 ternary observables)", panel)
    print_table("triad ladder (3 binary latents, 3 binary observables)", TRIAD_MODELS)


if __name__ == "__main__":
    main()
