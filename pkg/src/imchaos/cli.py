"""Command-line entry point: one subcommand per experiment.

Every run writes ``manifest.json``, one JSON file per check and ``results.csv`` into
``--out``. Exit codes: 0 all checks pass (or none requested), 2 configuration error,
3 a check failed, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from imchaos import __version__
from imchaos.errors import ImchaosError
from imchaos.reports import FAIL, INFO, PASS, MomentReport

EXIT_OK, EXIT_CONFIG, EXIT_FAIL, EXIT_NUMERICAL = 0, 2, 3, 4
COMMON = ("seed", "workers", "out", "config")


def number(text: str) -> float:
    """Float that also accepts fractions such as 1/128."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def count(text: str) -> int:
    """Integer that also accepts 1e6 style input."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v != int(v):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


@dataclass
class Context:
    out: Path
    seed: int
    workers: int
    files: list[str] = field(default_factory=list)

    def write_text(self, name: str, text: str) -> None:
        (self.out / name).write_text(text)
        self.files.append(name)

    def write_bytes(self, name: str, data: bytes) -> None:
        (self.out / name).write_bytes(data)
        self.files.append(name)

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name


Checks = list[tuple[str, MomentReport]]


# -- shared helpers ---------------------------------------------------------------------


def _domain(name: str):
    from imchaos.field.models import Domain

    return {"circle": Domain.CIRCLE, "disc": Domain.UNIT_DISC, "square": Domain.UNIT_SQUARE}[name]


def _model(name: str):
    from imchaos.field.models import circle, unit_disc, unit_square

    return {"circle": circle, "disc": unit_disc, "square": unit_square}[name]()


def _default_test_function(domain: str):
    from imchaos.chaos.testfunctions import bump, constant
    from imchaos.field.models import Domain

    if domain == "circle":
        return constant(1.0)
    if domain == "disc":
        return bump(0.0, 0.5)
    return bump(0.5 + 0.5j, 0.25, domain=Domain.UNIT_SQUARE)


def _sample(args, ctx: Context):
    from imchaos.field.grids import circle_grid, disc_grid, square_grid
    from imchaos.field.samplers import sample_circle_field, sample_disc_gff, sample_square_gff

    if args.domain == "circle":
        return sample_circle_field(args.modes, circle_grid(args.grid_points), ctx.seed)
    if args.domain == "square":
        return sample_square_gff(args.modes, square_grid(args.grid_points), ctx.seed, args.normalization)
    return sample_disc_gff(disc_grid(args.h, args.radius), ctx.seed, args.eps)


def _field_args(p) -> None:
    p.add_argument("--domain", choices=("circle", "disc", "square"), default="circle")
    p.add_argument("--modes", type=count, default=256, help="Fourier or KL modes (circle, square)")
    p.add_argument("--grid-points", type=count, default=512, help="circle points, or points per side on the square")
    p.add_argument("--normalization", choices=("laplacian", "log"), default="log", help="square KL normalization")
    p.add_argument("--h", type=number, default=1 / 24, help="disc lattice spacing")
    p.add_argument("--radius", type=number, default=0.9, help="disc grid radius")
    p.add_argument("--eps", type=number, default=0.05, help="disc mollification scale")


# -- subcommands --------------------------------------------------------------------------


def cmd_sample_field(args, ctx: Context) -> Checks:
    from imchaos.field.io import encode_field, field_csv

    r = _sample(args, ctx)
    ctx.write_bytes("field.imcf", encode_field(r))
    ctx.write_text("field.csv", field_csv(r))
    v = np.real(np.asarray(r.values))
    rep = MomentReport("field_summary", float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size)), 1, None, INFO, "", {
        "domain": args.domain, "scheme": r.scheme.kind.name.lower(), "points": int(v.size),
        "std": float(v.std(ddof=1)), "mean_variance": float(np.mean(r.variance_profile)),
    })
    return [("field_summary", rep)]


def cmd_build_chaos(args, ctx: Context) -> Checks:
    from imchaos.chaos.chaos import build_chaos, pair
    from imchaos.field.io import chaos_csv, encode_field

    r = _sample(args, ctx)
    c = build_chaos(r, args.beta, force=args.force)
    ctx.write_bytes("field.imcf", encode_field(r))
    ctx.write_text("chaos.csv", chaos_csv(c.grid, c.values))
    f = _default_test_function(args.domain)
    v = pair(c, f)
    rep = MomentReport("chaos_pairing", v, 0.0, 1, None, INFO, "", {"domain": args.domain, "beta": args.beta, "f": f.name})
    return [("chaos_pairing", rep)]


def cmd_check_approx(args, ctx: Context) -> Checks:
    from imchaos.chaos.kl import kl_martingale_diagnostic
    from imchaos.field.grids import circle_grid, disc_grid, square_grid
    from imchaos.field.schemes import ApproxScheme
    from imchaos.field.standard import check_standard_approximation

    if args.kind == "convolution":
        schemes = [ApproxScheme.convolution(e) for e in args.levels]
    else:
        make = {"fourier": ApproxScheme.fourier, "fejer": ApproxScheme.fejer, "kl": ApproxScheme.kl}[args.kind]
        schemes = [make(int(n)) for n in args.levels]
    K = {
        "circle": lambda: circle_grid(64).points,
        "square": lambda: square_grid(12, 0.25, 0.75).points,
        "disc": lambda: disc_grid(0.1, 0.5).points,
    }[args.domain]()
    r = check_standard_approximation(_model(args.domain), schemes, K)
    out = [("standard_approximation", MomentReport(
        "standard_approximation", float(r.cross_l1[-1]), 0.0, 0, None, PASS if r.all_ok else FAIL,
        "conditions (i)-(iii) on a compact set", {"domain": args.domain, "kind": args.kind, "levels": list(args.levels), **r.to_dict()},
    ))]
    if args.kl_replicas:
        f = _default_test_function("square")
        d = kl_martingale_diagnostic(f, args.beta, [0, 16, 64, 256], args.kl_replicas, ctx.seed, workers=ctx.workers)
        out.append(("kl_martingale", MomentReport(
            "kl_martingale", d.second[-1], d.second_stderr[-1], args.kl_replicas, d.bound, PASS if d.ok else FAIL,
            "constant mean, increasing second moments, below the limit bound", {"beta": args.beta, **d.to_dict()},
        )))
    return out


def cmd_moments(args, ctx: Context) -> Checks:
    from imchaos.moments.growth import moment_growth
    from imchaos.moments.identity import second_moment_identity

    if args.check == "identity":
        r = second_moment_identity(args.beta, args.n, args.replicas, ctx.seed, grid_points=args.grid_points, workers=ctx.workers)
        return [("second_moment_identity", r)]
    f = _default_test_function(args.domain)
    out = []
    for b in args.betas:
        r = moment_growth(_model(args.domain), f, b, args.nmax, seed=ctx.seed)
        out.append((f"moment_growth_beta{b:g}", r))
    return out


ONSAGER_VARIANTS = {"d2-C2g": "d2_C2g", "d2-C2g-square": "d2_C2g_square", "general-Hd": "general_Hd", "gff-global": "gff_global"}


def cmd_onsager(args, ctx: Context) -> Checks:
    from imchaos.moments.onsager import onsager_batch

    names = list(ONSAGER_VARIANTS) if args.variant == "all" else [args.variant]
    out = []
    for v in names:
        b = onsager_batch(ONSAGER_VARIANTS[v], args.configs, args.nmax, ctx.seed, args.radius)
        out.append((f"onsager_{ONSAGER_VARIANTS[v]}", b.report()))
    return out


def cmd_combinatorics(args, ctx: Context) -> Checks:
    from imchaos.moments.combinatorics import nn_graph_census, nn_integral_bound

    out = []
    for N in args.census_n:
        try:
            rep = nn_graph_census(N, args.census_configs, ctx.seed).report()
        except AssertionError as e:
            rep = MomentReport("nn_graph_census", float("nan"), 0.0, args.census_configs, 0.0, FAIL, str(e), {"N": N})
        out.append((f"nn_graph_census_N{N}", rep))
    out.append(("nn_integral_bound", nn_integral_bound(args.integral_n, args.beta, args.d, args.mc_points, ctx.seed)))
    return out


def cmd_tails(args, ctx: Context) -> Checks:
    from imchaos.moments.tails import gaussian_control, tail_fit

    out = [("tail_fit", tail_fit(args.beta, args.replicas, seed=ctx.seed, workers=ctx.workers))]
    if args.control_replicas:
        out.append(("tail_gaussian_control", gaussian_control(args.control_replicas, ctx.seed, ctx.workers)))
    return out


def cmd_regularity(args, ctx: Context) -> Checks:
    from imchaos.moments.regularity import regularity_fit, regularity_sweep

    out = [("regularity_fit", regularity_fit(args.beta, args.replicas, args.grid_points, seed=ctx.seed))]
    if args.sweep:
        out.append(("regularity_monotonicity", regularity_sweep(tuple(args.sweep), args.replicas, args.grid_points, ctx.seed)))
    return out


def cmd_critical_limit(args, ctx: Context) -> Checks:
    from imchaos.chaos.testfunctions import bump
    from imchaos.field.models import Domain
    from imchaos.moments.critical import critical_limit_scan

    fs = {"circle": bump(1.0, 0.8, domain=Domain.CIRCLE), "disc": bump(0.1 + 0.1j, 0.5)}
    out = []
    for dom in args.domains:
        m = _model(dom)
        betas = None if args.fractions is None else [float(np.sqrt(q * m.dimension)) for q in args.fractions]
        out.append((f"critical_limit_{dom}", critical_limit_scan(m, fs[dom], betas)))
    return out


def cmd_universality(args, ctx: Context) -> Checks:
    from imchaos.chaos.testfunctions import bump
    from imchaos.chaos.universality import CosineSeries, universality_scan
    from imchaos.field.models import Domain

    H = CosineSeries.square_wave(args.terms) if args.H == "square" else CosineSeries.harmonic(args.k)
    f = bump(1.0, 0.8, domain=Domain.CIRCLE)
    r = universality_scan(H, args.beta, f, tuple(args.modes), args.replicas, args.grid_points, ctx.seed)
    return [("universality_gap", r)]


def cmd_ising(args, ctx: Context) -> Checks:
    from imchaos.ising.lattice import encode_snapshot
    from imchaos.ising.samplers import gibbs_gate, sample_critical
    from imchaos.ising.xor import decay_exponent

    mask = np.ones((3, 3), bool)
    out = []
    for s in args.samplers:
        g = gibbs_gate(mask, n_steps=args.gibbs_steps, seed=ctx.seed, sampler=s)
        out.append((f"gibbs_gate_{s}", MomentReport(
            f"gibbs_gate_{s}", g.max_z, 0.0, args.gibbs_steps, None, PASS if g.passed else FAIL,
            "max state z-score < 4 against exact enumeration", {"sampler": s, "mask": mask.astype(int), "exact": g.exact, "empirical": g.empirical},
        )))
    if args.snapshot:
        lat = next(sample_critical(args.deltas[0], 1, 1, ctx.seed))
        ctx.write_bytes("snapshot.imis", encode_snapshot(lat))
    if args.samples:
        out.append(("decay_exponent", decay_exponent(tuple(args.deltas), n_samples=args.samples, seed=ctx.seed, workers=ctx.workers)))
    return out


def _xor_data(args, ctx: Context, points, tests):
    from imchaos.ising.xor import XorRunConfig, run_xor

    return run_xor(XorRunConfig(args.delta, args.samples, args.spacing, ctx.seed, workers=ctx.workers), points, tests)


def cmd_xor_moments(args, ctx: Context) -> Checks:
    from imchaos.chaos.testfunctions import bump
    from imchaos.ising.xor import two_point_points, xor_pairing_moment, xor_two_point

    f = bump(0.0, 0.5)
    x, y = complex(args.x, 0.0), complex(args.y, 0.0)
    data = _xor_data(args, ctx, two_point_points(x, y), [f])
    out = [("xor_two_point", xor_two_point(args.delta, x, y, args.samples, ctx.seed, data=data))]
    for k in args.k:
        out.append((f"xor_pairing_k{k}", xor_pairing_moment(args.delta, f, k, args.samples, ctx.seed, data=data)))
    return out


def cmd_sine_gordon(args, ctx: Context) -> Checks:
    from imchaos.chaos.testfunctions import bump
    from imchaos.ising.xor import magnetic_reweight, sine_gordon_comparison

    f = bump(0.0, 0.5)
    psi = bump(0.0, 0.5, args.psi_amplitude)
    data = _xor_data(args, ctx, [], [f, psi])
    mr = magnetic_reweight(args.delta, psi, f, n_samples=args.samples, seed=ctx.seed, data=data)
    sg = sine_gordon_comparison(mr, psi, f, replicas=args.replicas, seed=ctx.seed, workers=ctx.workers)
    return [("ising_reweight", mr), ("sine_gordon_comparison", sg)]


def cmd_rmt(args, ctx: Context) -> Checks:
    from imchaos.chaos.testfunctions import constant
    from imchaos.field.io import spectrum_csv
    from imchaos.rmt.cue import sample_cue
    from imchaos.rmt.cuechaos import CueChaosConfig, breakdown_probe, chaos_ratio_pair, cue_pairings

    ctx.write_text("spectrum.csv", spectrum_csv(sample_cue(args.N, ctx.seed).angles))
    f = constant(1.0)
    betas = sorted({args.beta_x, args.beta_y, args.beta_break})
    data = cue_pairings(CueChaosConfig(args.N, args.replicas, ctx.seed, workers=ctx.workers), betas, [f], ("X", "Y"))
    return [
        ("cue_X_chaos", chaos_ratio_pair("X", args.N, args.beta_x, f, args.replicas, data=data)),
        ("cue_Y_chaos", chaos_ratio_pair("Y", args.N, args.beta_y, f, args.replicas, data=data)),
        ("cue_Y_breakdown", breakdown_probe(data, f, args.beta_break)),
    ]


def cmd_periodicity(args, ctx: Context) -> Checks:
    from imchaos.chaos.testfunctions import constant
    from imchaos.rmt.cuechaos import periodicity_probe

    rows = periodicity_probe(args.N, list(args.betas), args.replicas, constant(1.0), ctx.seed, ctx.workers)
    out = []
    for row in rows:
        ok = bool(row["counting_periodic"])
        t = row["Ytilde"]
        out.append((f"periodicity_beta{row['beta']:g}", MomentReport(
            "counting_periodicity", t["moment"], t["stderr"], args.replicas, t["moment_plus_2"],
            PASS if ok else FAIL, "counting moment at beta and beta + 2 agree to stderr", row,
        )))
    return out


def cmd_figure1(args, ctx: Context) -> Checks:
    from imchaos.chaos.chaos import build_chaos
    from imchaos.colormap import write_png
    from imchaos.field.grids import square_grid
    from imchaos.field.samplers import sample_square_gff

    g = square_grid(args.pixels)
    r = sample_square_gff(args.modes, g, ctx.seed, args.normalization)
    c = build_chaos(r, args.beta)
    shape = (args.pixels, args.pixels)
    # image row 0 is the top edge y -> 1
    X = np.flipud(np.asarray(r.values).reshape(shape))
    C = np.flipud(np.real(c.values).reshape(shape))
    write_png(ctx.path("gff.png"), X)
    write_png(ctx.path("cosine.png"), C, limit=float(np.quantile(np.abs(C), 0.99)))
    rep = MomentReport("figure1", float(np.std(X)), 0.0, 1, None, INFO, "", {
        "modes": args.modes, "beta": args.beta, "pixels": args.pixels, "normalization": args.normalization,
        "field_range": [float(X.min()), float(X.max())], "cosine_range": [float(C.min()), float(C.max())],
    })
    return [("figure1", rep)]


# -- parser -------------------------------------------------------------------------------


def _add(sub, name: str, fn: Callable, help: str):
    p = sub.add_parser(name, help=help, description=help, allow_abbrev=False)
    p.add_argument("--seed", type=count, default=0)
    p.add_argument("--workers", type=count, default=None, help="default: IMCHAOS_WORKERS, else all cores")
    p.add_argument("--out", default=None, help=f"output directory (default: out/{name})")
    p.add_argument("--config", default=None, help="key=value file; command-line flags win")
    p.set_defaults(_fn=fn, _cmd=name)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="imchaos", description="Imaginary multiplicative chaos lab.", allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = _add(sub, "sample-field", cmd_sample_field, "draw one log-correlated field")
    _field_args(p)

    p = _add(sub, "build-chaos", cmd_build_chaos, "field plus its renormalized exponential")
    _field_args(p)
    p.add_argument("--beta", type=number, default=0.5)
    p.add_argument("--force", action="store_true", help="allow beta beyond sqrt(d)")

    p = _add(sub, "check-approx", cmd_check_approx, "standard-approximation conditions and the KL martingale")
    p.add_argument("--domain", choices=("circle", "disc", "square"), default="circle")
    p.add_argument("--kind", choices=("fourier", "fejer", "kl", "convolution"), default="fourier")
    p.add_argument("--levels", type=number, nargs="+", default=[16, 64, 256])
    p.add_argument("--kl-replicas", type=count, default=0, help="also run the square KL martingale diagnostic")
    p.add_argument("--beta", type=number, default=0.8)

    p = _add(sub, "moments", cmd_moments, "second-moment identity or moment growth")
    p.add_argument("--check", choices=("identity", "growth"), default="identity")
    p.add_argument("--beta", type=number, default=float(1 / np.sqrt(2)))
    p.add_argument("--n", type=count, default=512)
    p.add_argument("--replicas", type=count, default=200_000)
    p.add_argument("--grid-points", type=count, default=2048)
    p.add_argument("--domain", choices=("circle", "disc", "square"), default="circle")
    p.add_argument("--betas", type=number, nargs="+", default=[0.6, 0.9])
    p.add_argument("--nmax", type=count, default=6)

    p = _add(sub, "onsager", cmd_onsager, "Onsager inequality batches")
    p.add_argument("--variant", choices=(*ONSAGER_VARIANTS, "all"), default="all")
    p.add_argument("--configs", type=count, default=10_000)
    p.add_argument("--nmax", type=count, default=64)
    p.add_argument("--radius", type=number, default=0.5)

    p = _add(sub, "combinatorics", cmd_combinatorics, "nearest-neighbour graph census and integral bound")
    p.add_argument("--census-n", type=count, nargs="+", default=[2, 3, 4, 5, 6, 7])
    p.add_argument("--census-configs", type=count, default=1_000_000)
    p.add_argument("--integral-n", type=count, nargs="+", default=[2, 3, 4, 5, 6, 7, 8])
    p.add_argument("--beta", type=number, default=0.9)
    p.add_argument("--d", type=count, choices=(1, 2), default=2)
    p.add_argument("--mc-points", type=count, default=2**18)

    p = _add(sub, "tails", cmd_tails, "tail exponent of |mu(f)| and the Gaussian control")
    p.add_argument("--beta", type=number, default=0.9)
    p.add_argument("--replicas", type=count, default=1_000_000)
    p.add_argument("--control-replicas", type=count, default=1_000_000)

    p = _add(sub, "regularity", cmd_regularity, "Besov regularity exponent")
    p.add_argument("--beta", type=number, default=float(1 / np.sqrt(2)))
    p.add_argument("--replicas", type=count, default=200)
    p.add_argument("--grid-points", type=count, default=2**14)
    p.add_argument("--sweep", type=number, nargs="*", default=[0.4, 0.7, 0.9])

    p = _add(sub, "critical-limit", cmd_critical_limit, "white-noise limit near beta = sqrt(d)")
    p.add_argument("--domains", nargs="+", choices=("circle", "disc"), default=["circle", "disc"])
    p.add_argument("--fractions", type=number, nargs="+", default=None, help="values of beta^2/d, increasing to 1")

    p = _add(sub, "universality", cmd_universality, "periodic functions of the field against the cosine")
    p.add_argument("--H", choices=("square", "harmonic"), default="square")
    p.add_argument("--terms", type=count, default=25)
    p.add_argument("--k", type=count, default=1)
    p.add_argument("--beta", type=number, default=0.5)
    p.add_argument("--modes", type=count, nargs="+", default=[16, 64, 256, 1024])
    p.add_argument("--replicas", type=count, default=400)
    p.add_argument("--grid-points", type=count, default=4096)

    p = _add(sub, "ising", cmd_ising, "Gibbs gate and spin decay exponent")
    p.add_argument("--samplers", nargs="+", choices=("wolff", "sw"), default=["wolff", "sw"])
    p.add_argument("--gibbs-steps", type=count, default=10**7)
    p.add_argument("--deltas", type=number, nargs="+", default=[1 / 32, 1 / 64, 1 / 128])
    p.add_argument("--samples", type=count, default=20_000, help="samples per delta for the decay fit (0 skips it)")
    p.add_argument("--snapshot", action="store_true", help="write one spin snapshot at the first delta")

    p = _add(sub, "xor-moments", cmd_xor_moments, "XOR-Ising two-point function and pairing moments")
    p.add_argument("--delta", type=number, default=1 / 128)
    p.add_argument("--samples", type=count, default=200_000)
    p.add_argument("--spacing", type=count, default=2)
    p.add_argument("--x", type=number, default=0.3)
    p.add_argument("--y", type=number, default=-0.3)
    p.add_argument("--k", type=count, nargs="+", default=[1, 2])

    p = _add(sub, "sine-gordon", cmd_sine_gordon, "Ising-reweighted vs GFF-reweighted expectations")
    p.add_argument("--delta", type=number, default=1 / 64)
    p.add_argument("--samples", type=count, default=50_000)
    p.add_argument("--spacing", type=count, default=2)
    p.add_argument("--psi-amplitude", type=number, default=0.3)
    p.add_argument("--replicas", type=count, default=40_000)

    p = _add(sub, "rmt", cmd_rmt, "CUE chaos for log|det| and arg det")
    p.add_argument("--N", type=count, default=512)
    p.add_argument("--replicas", type=count, default=1000)
    p.add_argument("--beta-x", type=number, default=0.8)
    p.add_argument("--beta-y", type=number, default=0.95)
    p.add_argument("--beta-break", type=number, default=1.0)

    p = _add(sub, "periodicity", cmd_periodicity, "beta -> beta + 2 periodicity of the counting field")
    p.add_argument("--N", type=count, default=128)
    p.add_argument("--betas", type=number, nargs="+", default=[0.5, 1.0])
    p.add_argument("--replicas", type=count, default=400)

    p = _add(sub, "figure1", cmd_figure1, "GFF on the square and its cosine as PNG heatmaps")
    p.add_argument("--modes", type=count, default=200)
    p.add_argument("--beta", type=number, default=float(1 / np.sqrt(2)))
    p.add_argument("--pixels", type=count, default=256)
    p.add_argument("--normalization", choices=("laplacian", "log"), default="log")
    return parser


# -- config files -------------------------------------------------------------------------


def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise CliError(f"cannot read config {path}: {e}")
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _explicit(sub: argparse.ArgumentParser, argv: list[str]) -> set[str]:
    """Destinations set on the command line."""
    flags = {}
    for a in sub._actions:
        for s in a.option_strings:
            flags[s] = a.dest
    seen = set()
    for tok in argv:
        key = tok.split("=", 1)[0]
        if key in flags:
            seen.add(flags[key])
    return seen


def _convert(action: argparse.Action, raw: str):
    def one(s):
        return action.type(s) if action.type else s

    try:
        if isinstance(action, argparse._StoreTrueAction):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if action.nargs in ("+", "*"):
            vals = [one(s) for s in raw.replace(",", " ").split()]
        else:
            vals = one(raw)
    except (argparse.ArgumentTypeError, ValueError) as e:
        raise CliError(f"bad value for {action.dest}: {raw!r} ({e})")
    choices = action.choices
    if choices is not None:
        for v in vals if isinstance(vals, list) else [vals]:
            if v not in choices:
                raise CliError(f"{action.dest}: {v!r} not in {sorted(choices)}")
    return vals


def apply_config(args: argparse.Namespace, sub: argparse.ArgumentParser, argv: list[str]) -> None:
    if not args.config:
        return
    cfg = read_config(args.config)
    actions = {a.dest: a for a in sub._actions if a.option_strings and a.dest not in ("help", "config")}
    unknown = sorted(set(cfg) - set(actions))
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(unknown)}")
    given = _explicit(sub, argv)
    for k, raw in cfg.items():
        if k not in given:
            setattr(args, k, _convert(actions[k], raw))


# -- run ----------------------------------------------------------------------------------


def _params(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "out", "_fn", "_cmd"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _csv_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, complex):
        return repr(x.real) if x.imag == 0 else f"{x.real!r}{x.imag:+.17g}j"
    return repr(float(np.real(x)))


def _results_csv(checks: Checks, params: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "params", "value", "oracle", "verdict"])
    ptxt = ";".join(f"{k}={v}" for k, v in params.items())
    for key, r in checks:
        w.writerow([key, ptxt, _csv_value(complex(r.value)), _csv_value(r.oracle), r.verdict])
    return buf.getvalue()


def _timestamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_CONFIG
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        apply_config(args, sub, argv)
    except CliError as e:
        print(f"imchaos: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.workers is None:
        from imchaos.rng import default_workers

        args.workers = default_workers()
    if args.workers < 1:
        print("imchaos: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or os.path.join("out", args.command))
    params = _params(args)
    manifest = {"cmd": args.command, "params": params, "seed": args.seed, "version": __version__, "started": _timestamp()}
    ctx = Context(out, args.seed, args.workers)
    try:
        out.mkdir(parents=True, exist_ok=True)
        checks = args._fn(args, ctx)
    except ImchaosError as e:
        print(f"imchaos: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL if e.numerical else EXIT_CONFIG
    except (ValueError, OSError) as e:
        print(f"imchaos: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    keys = [k for k, _ in checks]
    if len(set(keys)) != len(keys):
        raise RuntimeError(f"duplicate check names {keys}")
    for key, r in checks:
        ctx.write_text(f"{key}.json", r.to_json() + "\n")
    ctx.write_text("results.csv", _results_csv(checks, params))
    manifest["finished"] = _timestamp()
    manifest["verdicts"] = [{"check": k, "verdict": r.verdict} for k, r in checks]
    manifest["files"] = sorted(ctx.files)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return EXIT_FAIL if any(r.verdict == FAIL for _, r in checks) else EXIT_OK


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
