"""Batch command-line interface.

Each subcommand computes one deterministic report and writes one
artifact (json, csv, or svg) into the output directory.  Options come
from flags, which override a flat ``key = value`` config file with one
section per subcommand (the DEFAULT section applies everywhere).
Every report embeds the fully resolved configuration and a sha256
content hash; re-running with the same seed and config is byte-stable.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(geometry or group gates), 4 acceptance failure from ``verify``.
Randomized commands require an explicit --seed.  HYPERLAB_THREADS caps
the BLAS thread pools (exported before the numeric stack loads).
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys

from . import __version__
from .config import DEFAULT, TOL_FIELD_NAMES
from . import serialize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


class ConfigError(ValueError):
    """Bad flag, config key, or value combination (exit code 2)."""


class Opt:
    """One resolvable option: CLI flag, config key, and default."""

    __slots__ = ("name", "typ", "default", "help", "choices", "required")

    def __init__(self, name, typ, default=None, help="", choices=None, required=False):
        self.name = name
        self.typ = typ
        self.default = default
        self.help = help
        self.choices = choices
        self.required = required

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


def _tol_opts() -> list[Opt]:
    out = []
    for field in TOL_FIELD_NAMES:
        typ = "int" if field == "renorm_every" else "float"
        default = getattr(DEFAULT, field)
        out.append(
            Opt(
                "tol-" + field.replace("_", "-"),
                typ,
                default,
                f"override tolerance '{field}' (default {default})",
            )
        )
    return out


COMMON_OPTS = [
    Opt("seed", "int", None, "RNG seed; required for randomized commands"),
    Opt("out", "str", ".", "output directory for the artifact"),
    Opt("format", "str", "json", "artifact format", choices=("json", "csv", "svg")),
] + _tol_opts()

COMMANDS: dict[str, dict] = {
    "embed-tree": {
        "help": "embed a tree through the lambda**d kernel and fit QI constants",
        "opts": [
            Opt("tree", "str", "path:3", "tree spec kind:params or file:PATH"),
            Opt("lambda", "float", 2.0, "kernel base lambda > 1"),
            Opt("midpoints", "bool", False, "include edge midpoints"),
            Opt("max-dim", "int", None, "truncate embedding to this many spatial dims"),
            Opt("c-cap", "float", 1.0, "additive cap for the QI fit"),
        ],
    },
    "fuchsian": {
        "help": "octagon surface group: relator, lengths, splittings",
        "opts": [Opt("genus", "int", 2, "surface genus", choices=(2, 3))],
    },
    "rho-t": {
        "help": "fit the kernel-rescaled representation and report length scaling",
        "opts": [
            Opt("t", "float", 0.5, "scaling exponent in (0, 1]"),
            Opt("genus", "int", 2, "surface genus", choices=(2, 3)),
            Opt("ball-radius", "int", 6, "word-ball radius for the orbit sample"),
            Opt("sample-per-length", "int", 60, "sampled words per length beyond 2"),
            Opt("max-dim", "int", None, "truncate embedding to this many spatial dims"),
        ],
        "needs_seed": True,
    },
    "bend": {
        "help": "bend the padded genus-2 table along a splitting and certify",
        "opts": [
            Opt("split", "str", "amalgam", "splitting kind", choices=("amalgam", "hnn")),
            Opt("z", "str", "random", "centralizer twist", choices=("identity", "random")),
            Opt("dim", "int", 9, "spatial dimension to pad the table into"),
            Opt("t", "float", 1.0, "scaling exponent; only the exact t=1 table bends"),
            Opt("angles", "floats", None, "comma list overriding the class angles"),
            Opt("words", "int", 100, "certificate word count"),
        ],
    },
    "centralizer-dim": {
        "help": "centralizer Lie-algebra dimensions across orthogonal structures",
        "opts": [
            Opt("max-size", "int", 12, "largest random orthogonal size in the sweep"),
            Opt("trials", "int", 4, "random draws per size"),
        ],
        "needs_seed": True,
    },
    "discreteness": {
        "help": "orbit counts in a metric ball across word-ball radii",
        "opts": [
            Opt("radius", "float", 2.0, "metric ball radius R"),
            Opt("ball-radius", "int", 8, "word-ball radius (also runs +1)"),
            Opt("genus", "int", 2, "surface genus", choices=(2, 3)),
            Opt("check-invariance", "bool", False, "recount after a seeded conjugation"),
        ],
    },
    "stability": {
        "help": "QI constants under seeded elliptic perturbations",
        "opts": [
            Opt("magnitudes", "floats", (0.0, 1e-3), "perturbation sizes, comma list"),
            Opt("trials", "int", 20, "trials per magnitude"),
            Opt("ball-radius", "int", 6, "word-ball radius for the fits"),
            Opt("c-cap", "float", 3.0, "additive cap for the QI fits"),
            Opt("genus", "int", 2, "surface genus", choices=(2, 3)),
        ],
        "needs_seed": True,
    },
    "verify": {
        "help": "run the acceptance suite; exit 4 on any failure",
        "opts": [],
    },
}


def _apply_thread_cap() -> None:
    """Export HYPERLAB_THREADS to the BLAS pools before numpy loads."""
    raw = os.environ.get("HYPERLAB_THREADS", "").strip()
    if not raw or not raw.isdigit():
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperlab",
        description="hyperboloid-model reports: embeddings, bending, discreteness",
    )
    parser.add_argument("--version", action="version", version=f"hyperlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, spec in COMMANDS.items():
        p = sub.add_parser(name, help=spec["help"])
        p.add_argument("--config", default=None, help="INI config file; flags win")
        for opt in spec["opts"] + COMMON_OPTS:
            if opt.typ == "bool":
                p.add_argument(
                    "--" + opt.name,
                    action=argparse.BooleanOptionalAction,
                    default=None,
                    help=opt.help,
                )
            else:
                p.add_argument("--" + opt.name, default=None, help=opt.help, metavar="V")
    return parser


def _coerce(name: str, typ: str, raw, choices):
    """Convert a flag/config string to its declared type."""
    if not isinstance(raw, str):
        v = raw
    else:
        try:
            if typ == "int":
                v = int(raw)
            elif typ == "float":
                v = float(raw)
            elif typ == "floats":
                v = tuple(float(x) for x in raw.split(",") if x.strip())
            elif typ == "bool":
                low = raw.strip().lower()
                if low in ("1", "true", "yes", "on"):
                    v = True
                elif low in ("0", "false", "no", "off"):
                    v = False
                else:
                    raise ValueError(raw)
            else:
                v = raw
        except ValueError:
            raise ConfigError(f"option '{name}': cannot parse {raw!r} as {typ}")
    if choices is not None and v not in choices:
        raise ConfigError(f"option '{name}': {v!r} not in {choices}")
    return v


def _load_config_file(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    if not cp.read(path):
        raise ConfigError(f"config file not found: {path}")
    return cp


def resolve_options(command: str, args_dict: dict) -> dict:
    """Merge flags over config-file values over built-in defaults."""
    spec = COMMANDS[command]
    cp = None
    if args_dict.get("config"):
        cp = _load_config_file(args_dict["config"])
    resolved = {}
    for opt in spec["opts"] + COMMON_OPTS:
        v = args_dict.get(opt.dest)
        if v is None and cp is not None:
            raw = None
            if cp.has_section(command) and cp.has_option(command, opt.name):
                raw = cp.get(command, opt.name)
            elif opt.name in cp.defaults():
                raw = cp.defaults()[opt.name]
            if raw is not None:
                v = raw
        if v is None:
            v = opt.default
        else:
            v = _coerce(opt.name, opt.typ, v, opt.choices)
        resolved[opt.dest] = v
    if spec.get("needs_seed") and resolved.get("seed") is None:
        raise ConfigError(f"'{command}' is randomized: --seed is required")
    return resolved


def _resolve_tolerances(resolved: dict):
    overrides = {}
    for field in TOL_FIELD_NAMES:
        v = resolved["tol_" + field]
        if v != getattr(DEFAULT, field):
            overrides[field] = v
    return DEFAULT.with_overrides(**overrides)


def _report_config(command: str, resolved: dict) -> dict:
    """The configuration block embedded in every artifact.

    Output location and format are I/O choices, not inputs of the
    computation, so they are left out: two runs that differ only in
    where the artifact lands stay byte-identical.
    """
    cfg = {}
    for opt in COMMANDS[command]["opts"]:
        cfg[opt.name] = resolved[opt.dest]
    if resolved.get("seed") is not None:
        cfg["seed"] = resolved["seed"]
    cfg["tolerances"] = {f: resolved["tol_" + f] for f in TOL_FIELD_NAMES}
    return cfg


def _write_artifact(command: str, resolved: dict, report: dict, rows, svg_spec):
    fmt = resolved["format"]
    outdir = resolved["out"]
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"{command}.{fmt}")
    text = render_artifact(fmt, command, report, rows, svg_spec)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def render_artifact(fmt: str, command: str, report: dict, rows, svg_spec) -> str:
    """Serialize one report in the requested format (pure function)."""
    if fmt == "json":
        return serialize.to_json(serialize.finalize_report(report))
    if fmt == "csv":
        return serialize.to_csv(rows, config=report["config"])
    if svg_spec is None:
        raise ConfigError(f"'{command}' has no svg rendering; use json or csv")
    return serialize.svg_plot(config=report["config"], **svg_spec)


# ---------------------------------------------------------------------------
# command handlers: each returns (body, rows, svg_spec, summary_lines, exit)


def cmd_embed_tree(cfg, tol):
    import numpy as np

    from .analysis import qi_fit
    from .trees import tree_embed, tree_from_spec

    lam = cfg["lambda"]
    if not lam > 1.0:
        raise ConfigError("--lambda must exceed 1")
    tree = tree_from_spec(cfg["tree"])
    emb = tree_embed(
        tree, lam, include_midpoints=cfg["midpoints"], max_dim=cfg["max_dim"], tol=tol
    )
    dists, kinds = tree.configuration_distances(include_midpoints=cfg["midpoints"])
    d_emb = np.arccosh(np.clip(emb.pairwise_cosh(), 1.0, None))
    d_exact = np.arccosh(lam ** dists)
    iu = np.triu_indices(len(kinds), 1)
    rel = float(np.max(np.abs(d_emb[iu] - d_exact[iu]) / d_exact[iu]))
    pairs = list(zip(dists[iu].tolist(), d_emb[iu].tolist()))
    qi = qi_fit(pairs, c_cap=cfg["c_cap"])
    body = {
        "tree": {
            "spec": cfg["tree"],
            "n_vertices": tree.n_vertices,
            "n_edges": len(tree.edges),
        },
        "embedding": {
            "ambient_dim": emb.ambient_dim,
            "n_points": emb.n_points,
            "neg_eigenvalue": emb.neg_eigenvalue,
            "diagnostics": emb.diagnostics,
        },
        "distance_check": {"max_rel_error": rel, "n_pairs": len(pairs)},
        "qi": qi.to_dict(),
    }
    if len(kinds) <= 24:
        body["labels"] = list(kinds)
        body["distance_matrix"] = d_emb
    svg = {
        "points": pairs[:2000],
        "lines": [
            (qi.K, qi.C, f"K*n+C, K={qi.K:.4f}"),
            (1.0 / qi.K, -qi.C, "n/K-C"),
        ],
        "title": f"tree {cfg['tree']} lambda={lam}",
        "xlabel": "tree distance",
        "ylabel": "embedded distance",
    }
    rows = [
        {
            "experiment": "embed-tree",
            "parameter": f"tree={cfg['tree']},lambda={lam}",
            "K": qi.K,
            "C": qi.C,
            "count": emb.n_points,
            "residual": rel,
        }
    ]
    lines = [
        f"embedded {emb.n_points} configuration points in dimension {emb.ambient_dim}",
        f"max relative distance error {rel:.3e}",
        f"QI fit: K={qi.K!r} C={qi.C!r}",
    ]
    return body, rows, svg, lines, EXIT_OK


def cmd_fuchsian(cfg, tol):
    from .groups import (
        fuchsian_surface,
        side_pairing_length,
        split_amalgam_surface,
        split_hnn_genus2,
        verify_splitting,
    )
    from .isometry import translation_length

    genus = cfg["genus"]
    table = fuchsian_surface(genus, tol=tol)
    lengths = {
        name: translation_length(table.images[name], tol=tol)
        for name in table.presentation.generators
    }
    splittings = {"amalgam": verify_splitting(table, split_amalgam_surface(genus))}
    if genus == 2:
        splittings["hnn"] = verify_splitting(table, split_hnn_genus2())
    body = {
        "genus": genus,
        "provenance": table.provenance,
        "relator_residual": table.relator_residual,
        "side_pairing_length": side_pairing_length(genus),
        "generator_lengths": lengths,
        "splitting_residuals": splittings,
        "diagnostics": table.diagnostics,
    }
    rows = [
        {
            "experiment": "fuchsian",
            "parameter": f"genus={genus}",
            "count": len(lengths),
            "residual": table.relator_residual,
        }
    ]
    lines = [
        f"genus {genus}: relator residual {table.relator_residual:.3e}",
        "splitting residuals: "
        + ", ".join(f"{k}={v:.3e}" for k, v in splittings.items()),
    ]
    return body, rows, None, lines, EXIT_OK


def cmd_rho_t(cfg, tol):
    from .groups import fuchsian_surface
    from .isometry import translation_length
    from .kernel import fit_scaled_generators, scaled_length_curve

    t = cfg["t"]
    if not 0.0 < t <= 1.0:
        raise ConfigError("--t must lie in (0, 1]")
    base = fuchsian_surface(cfg["genus"], tol=tol)
    names = base.presentation.generators
    base_lengths = {n: translation_length(base.images[n], tol=tol) for n in names}
    closed_form = {}
    curves = []
    for n in names:
        ell = base_lengths[n]
        curve = scaled_length_curve(ell, t, 40)
        closed_form[n] = {
            "asymptote": t * ell,
            "value_at_40": curve[-1],
            "rel_gap_at_40": abs(curve[-1] - t * ell) / (t * ell),
        }
        curves.append(
            ([(k + 1, curve[k] / (t * ell)) for k in range(40)], f"{n} ratio")
        )
    fitted = fit_scaled_generators(
        base,
        t,
        cfg["ball_radius"],
        sample_per_length=cfg["sample_per_length"],
        seed=cfg["seed"],
        max_dim=cfg["max_dim"],
        tol=tol,
    )
    fit_report = {}
    worst = 0.0
    for n in names:
        got = translation_length(fitted.images[n], tol=tol)
        rel = abs(got - t * base_lengths[n]) / (t * base_lengths[n])
        worst = max(worst, rel)
        fit_report[n] = {"length": got, "target": t * base_lengths[n], "rel_error": rel}
    body = {
        "t": t,
        "genus": cfg["genus"],
        "base_lengths": base_lengths,
        "closed_form": closed_form,
        "fitted": fit_report,
        "max_rel_length_error": worst,
        "diagnostics": fitted.diagnostics,
    }
    rows = [
        {
            "experiment": "rho-t",
            "parameter": f"t={t},gen={n}",
            "count": fitted.diagnostics["orbit_points"],
            "residual": fit_report[n]["rel_error"],
        }
        for n in names
    ]
    svg = {
        "points": [(40, fit_report[n]["length"] / (t * base_lengths[n])) for n in names],
        "lines": [(0.0, 1.0, "limit ratio 1")],
        "curves": curves,
        "title": f"length rescaling t={t}",
        "xlabel": "n",
        "ylabel": "a_n / (t n length)",
    }
    lines = [
        f"fitted {len(names)} generators on {fitted.diagnostics['orbit_points']} orbit points",
        f"worst relative length error {worst:.3e} (target t*length)",
    ]
    return body, rows, svg, lines, EXIT_OK


def cmd_bend(cfg, tol):
    import numpy as np

    from .bending import (
        BendParams,
        bend_amalgam,
        bend_hnn,
        bend_pipeline_frame,
        centralizer_element,
        certificate_words,
        length_spectrum,
        nonconjugacy_certificate,
        pad_to_dimension,
        random_bend_params,
    )
    from .groups import fuchsian_genus2, split_amalgam_genus2, split_hnn_genus2
    from .spectral import orthogonal_block_decomposition

    if cfg["t"] != 1.0:
        raise ConfigError(
            "bending needs the exact t=1 table; rescaled tables carry no "
            "relator gate for the bent result to be checked against"
        )
    if cfg["dim"] < 3:
        raise ConfigError("--dim must be at least 3 to leave room for a twist")
    if cfg["z"] == "random" and cfg["seed"] is None:
        raise ConfigError("--z random needs --seed")
    rho = pad_to_dimension(fuchsian_genus2(tol=tol), cfg["dim"], tol=tol)
    split = split_amalgam_genus2() if cfg["split"] == "amalgam" else split_hnn_genus2()
    frame = bend_pipeline_frame(rho, split, tol=tol)
    dec = orthogonal_block_decomposition(frame.rotation, tol=tol)
    n_classes = len(dec.angle_classes(tol.angle))
    if cfg["z"] == "identity":
        params = BendParams(angles=(0.0,) * n_classes)
    else:
        params = random_bend_params(dec, cfg["seed"])
    if cfg["angles"] is not None:
        if len(cfg["angles"]) != n_classes:
            raise ConfigError(
                f"--angles needs exactly {n_classes} values for this frame"
            )
        import dataclasses

        params = dataclasses.replace(params, angles=tuple(cfg["angles"]))
    z = centralizer_element(frame, params, tol=tol)
    bend = bend_amalgam if cfg["split"] == "amalgam" else bend_hnn
    sigma = bend(rho, split, z)
    words = certificate_words(rho.presentation, cfg["words"])
    base_spec = dict(length_spectrum(rho, words, tol=tol))
    bent_spec = dict(length_spectrum(sigma, words, tol=tol))
    cert = nonconjugacy_certificate(rho, sigma, words, tol=tol)
    tables_equal = all(
        np.array_equal(sigma.images[n].matrix, rho.images[n].matrix)
        for n in rho.presentation.generators
    )
    preview = [
        {
            "word": list(w.letters),
            "base_length": base_spec[w],
            "bent_length": bent_spec[w],
        }
        for w in words[:10]
    ]
    body = {
        "split": cfg["split"],
        "dim": cfg["dim"],
        "bend_params": params.to_dict(),
        "relator_residual": sigma.relator_residual,
        "diagnostics": sigma.diagnostics,
        "certificate": cert.to_dict(),
        "tables_equal": tables_equal,
        "spectrum_preview": preview,
    }
    rows = [
        {
            "experiment": "bend",
            "parameter": f"split={cfg['split']},z={cfg['z']}",
            "count": len(words),
            "residual": cert.max_difference,
        }
    ]
    svg = {
        "points": [(base_spec[w], bent_spec[w]) for w in words],
        "lines": [(1.0, 0.0, "unchanged spectrum")],
        "title": f"marked lengths, {cfg['split']} twist",
        "xlabel": "base length",
        "ylabel": "bent length",
    }
    lines = [
        f"bent relator residual {sigma.relator_residual:.3e}",
        f"certificate: {cert.verdict} "
        f"(max length difference {cert.max_difference:.3e} over {len(words)} words)",
        f"tables_equal={tables_equal}",
    ]
    return body, rows, svg, lines, EXIT_OK


def cmd_centralizer_dim(cfg, tol):
    import numpy as np

    from .spectral import (
        centralizer_algebra_dim,
        rotation_block_matrix,
        spread_angles,
        structured_orthogonal,
    )

    if cfg["max_size"] < 2:
        raise ConfigError("--max-size must be at least 2")
    sweep = []
    all_match = True
    for size in range(2, cfg["max_size"] + 1):
        for trial in range(cfg["trials"]):
            rng = np.random.default_rng([cfg["seed"], size, trial])
            t, predicted, structure = structured_orthogonal(rng, size)
            dim, _ = centralizer_algebra_dim(t, tol=tol)
            match = dim == predicted
            all_match = all_match and match
            sweep.append(
                {
                    "size": size,
                    "trial": trial,
                    "structure": structure,
                    "predicted": predicted,
                    "computed": dim,
                    "match": match,
                }
            )
    growth = []
    growth_linear = True
    for k in range(2, 13):
        core = rotation_block_matrix(spread_angles(k))
        dim, _ = centralizer_algebra_dim(core, tol=tol)
        growth.append({"blocks": k, "size": 2 * k, "dim": dim})
        growth_linear = growth_linear and dim == k
    body = {
        "sweep": sweep,
        "all_match": all_match,
        "growth": growth,
        "growth_linear": growth_linear,
    }
    rows = [
        {
            "experiment": "centralizer-dim",
            "parameter": f"size={r['size']},trial={r['trial']}",
            "count": r["computed"],
            "residual": abs(r["computed"] - r["predicted"]),
        }
        for r in sweep
    ]
    svg = {
        "points": [(r["blocks"], r["dim"]) for r in growth],
        "lines": [(1.0, 0.0, "one dim per distinct block")],
        "title": "centralizer dimension growth",
        "xlabel": "distinct rotation blocks",
        "ylabel": "centralizer dimension",
    }
    lines = [
        f"sweep: {len(sweep)} structured draws, all_match={all_match}",
        f"growth across {len(growth)} block counts, linear={growth_linear}",
    ]
    return body, rows, svg, lines, EXIT_OK


def cmd_discreteness(cfg, tol):
    import numpy as np

    from .analysis import MAX_BALL_RADIUS, discreteness_count
    from .groups import fuchsian_surface
    from .isometry import random_isometry
    from .minkowski import HPoint, base_point

    br = cfg["ball_radius"]
    if not 1 <= br <= MAX_BALL_RADIUS - 1:
        raise ConfigError(f"--ball-radius must lie in [1, {MAX_BALL_RADIUS - 1}]")
    if cfg["radius"] <= 0:
        raise ConfigError("--radius must be positive")
    table = fuchsian_surface(cfg["genus"], tol=tol)
    counts = {}
    for r in (br, br + 1):
        counts[str(r)] = discreteness_count(table, R=cfg["radius"], ball_radius=r)
    stabilized = counts[str(br)] == counts[str(br + 1)]
    body = {
        "R": cfg["radius"],
        "genus": cfg["genus"],
        "counts": counts,
        "stabilized": stabilized,
    }
    lines = [
        f"R={cfg['radius']}: counts {counts} stabilized={stabilized}",
    ]
    if cfg["check_invariance"]:
        if cfg["seed"] is None:
            raise ConfigError("--check-invariance needs --seed")
        g = random_isometry(np.random.default_rng(cfg["seed"]), 2, scale=0.5)
        moved = HPoint(g.matrix @ base_point(2).coords, tol=tol)
        conj_count = discreteness_count(
            table.conjugated(g), x0=moved, R=cfg["radius"], ball_radius=br
        )
        body["invariance"] = {
            "seed": cfg["seed"],
            "conjugated_count": conj_count,
            "matches": conj_count == counts[str(br)],
        }
        lines.append(
            f"conjugated+transported count {conj_count} "
            f"matches={body['invariance']['matches']}"
        )
    rows = [
        {
            "experiment": "discreteness",
            "parameter": f"R={cfg['radius']},ball={r}",
            "count": c,
        }
        for r, c in counts.items()
    ]
    return body, rows, None, lines, EXIT_OK


def cmd_stability(cfg, tol):
    from .analysis import stability_probe
    from .groups import fuchsian_surface

    if any(m < 0 for m in cfg["magnitudes"]):
        raise ConfigError("--magnitudes must be nonnegative")
    if cfg["trials"] < 1:
        raise ConfigError("--trials must be positive")
    table = fuchsian_surface(cfg["genus"], tol=tol)
    report = stability_probe(
        table,
        cfg["magnitudes"],
        trials=cfg["trials"],
        seed=cfg["seed"],
        ball_radius=cfg["ball_radius"],
        c_cap=cfg["c_cap"],
        tol=tol,
    )
    spreads = {}
    for m in cfg["magnitudes"]:
        if m > 0:
            dk, dc = report.spread(m)
            spreads[repr(float(m))] = {"dK_rel": dk, "dC_rel": dc}
    body = dict(report.to_dict())
    body["spreads"] = spreads
    rows = [
        {
            "experiment": "stability",
            "parameter": "baseline",
            "K": report.baseline.K,
            "C": report.baseline.C,
        }
    ] + [
        {
            "experiment": "stability",
            "parameter": f"eps={row.magnitude},trial={row.trial}",
            "K": row.K,
            "C": row.C,
            "residual": row.relator_residual,
        }
        for row in report.rows
    ]
    svg = {
        "points": [(row.magnitude, row.K) for row in report.rows],
        "lines": [(0.0, report.baseline.K, f"baseline K={report.baseline.K:.4f}")],
        "title": "QI multiplicative constant under perturbation",
        "xlabel": "perturbation magnitude",
        "ylabel": "fitted K",
    }
    lines = [
        f"baseline K={report.baseline.K!r} C={report.baseline.C!r}",
    ] + [
        f"eps={m}: max relative drift dK={v['dK_rel']:.3e} dC={v['dC_rel']:.3e}"
        for m, v in spreads.items()
    ]
    return body, rows, svg, lines, EXIT_OK


def cmd_verify(cfg, tol):
    from .acceptance import run_all

    results = run_all(out_dir=cfg["out"])
    lines = []
    for c in results["criteria"]:
        tag = "PASS" if c["passed"] else "FAIL"
        lines.append(f"{tag} criterion {c['id']}: {c['name']} ({c['headline']})")
    lines.append(
        f"{results['n_passed']}/{results['n_criteria']} acceptance criteria passed"
    )
    rows = [
        {
            "experiment": "verify",
            "parameter": f"criterion {c['id']}: {c['name']}",
            "count": int(c["passed"]),
            "residual": c["headline"],
        }
        for c in results["criteria"]
    ]
    code = EXIT_OK if results["all_passed"] else EXIT_ACCEPTANCE
    return results, rows, None, lines, code


HANDLERS = {
    "embed-tree": cmd_embed_tree,
    "fuchsian": cmd_fuchsian,
    "rho-t": cmd_rho_t,
    "bend": cmd_bend,
    "centralizer-dim": cmd_centralizer_dim,
    "discreteness": cmd_discreteness,
    "stability": cmd_stability,
    "verify": cmd_verify,
}


def _print_error(command: str, kind: str, exc: Exception, code: int) -> None:
    payload = {
        "error": {
            "command": command,
            "kind": kind,
            "type": type(exc).__name__,
            "message": str(exc),
            "exit_code": code,
        }
    }
    print(json.dumps(payload, sort_keys=True))


def run_command(command: str, args_dict: dict) -> int:
    from .groups import GroupError
    from .minkowski import GeometryError

    try:
        resolved = resolve_options(command, args_dict)
        tol = _resolve_tolerances(resolved)
        body, rows, svg_spec, lines, code = HANDLERS[command](resolved, tol)
        report = {"command": command, "config": _report_config(command, resolved)}
        report.update(body)
        path = _write_artifact(command, resolved, report, rows, svg_spec)
    except ConfigError as exc:
        _print_error(command, "config", exc, EXIT_CONFIG)
        return EXIT_CONFIG
    except (GeometryError, GroupError) as exc:
        _print_error(command, "numerical", exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    for line in lines:
        print(line)
    print(f"wrote {path}")
    return code


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    return run_command(args.command, vars(args))


if __name__ == "__main__":
    sys.exit(main())
