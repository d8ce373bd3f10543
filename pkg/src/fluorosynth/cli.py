"""Command-line front end: ingest, generate, validate, tune-p.

Exit codes: 0 success, 1 guideline failure, 2 usage error, 3 data error.
Every output directory gets a ``run.json``; passing it back with ``--config``
reproduces the run byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shutil
import sys
import tempfile
import warnings
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

import numpy as np

from . import __version__
from .chemdb import (
    DEFAULT_RANGE,
    ManifestError,
    MixtureSpec,
    code_binary,
    enumerate_mixtures,
    load_manifest,
    record_to_entry,
    synthesize_sample,
)
from .noise import (
    MODELS,
    NoiseParams,
    TargetUnreachable,
    apply_noise,
    bisect_p,
    check_constraints,
    stray_light,
    wavelength_shift,
    window_triple_means,
)
from .spectral import SpectrumError, format_float, spectrum_csv_text
from .streams import substream
from .validation import (
    DEFAULT_CONCENTRATION,
    MEAN_GATE,
    SKEW_GATE,
    FAIL,
    guideline_report,
    histogram,
    run_sweep,
    study_report,
    symmetric_range,
)

EXIT_OK, EXIT_GUIDELINE, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3
LOCK_NAME = "bundle.lock"
# RunConfig keys that never go into run.json.
_UNRECORDED = {"out", "config", "force", "func"}


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _add_noise_flags(p: argparse.ArgumentParser) -> None:
    d = NoiseParams()
    g = p.add_argument_group("noise parameters")
    g.add_argument("--model", choices=MODELS, default="optimized")
    g.add_argument("--eta", type=float, default=d.eta)
    g.add_argument("--alpha", type=float, default=d.alpha)
    g.add_argument("--window-len", type=int, default=d.window_len)
    g.add_argument("--p", type=float, default=d.p, help="compression probability")
    for name in ("a_c1", "a_c2", "a_c3", "a_d1"):
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=float, default=getattr(d, name))


def _noise_params(args, seed: int | None = None) -> NoiseParams:
    try:
        return NoiseParams(
            eta=args.eta, alpha=args.alpha, window_len=args.window_len, p=args.p,
            a_c1=args.a_c1, a_c2=args.a_c2, a_c3=args.a_c3, a_d1=args.a_d1,
            seed=args.seed if seed is None else seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fluorosynth", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="run.json of an earlier run; its values become defaults")
        return p

    p = command("ingest", "resample and pad a manifest's spectra into a bundle")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.add_argument("--range", nargs=2, type=float, metavar=("LOW", "HIGH"), default=list(DEFAULT_RANGE))
    p.add_argument("--force", action="store_true", help="replace an existing output directory")
    p.set_defaults(func=cmd_ingest)

    p = command("generate", "expand a bundle into a labelled dataset with noisy copies")
    p.add_argument("--bundle")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int, help="only mixtures with exactly k chemicals")
    p.add_argument("--concentrations", type=_floats, default=[DEFAULT_CONCENTRATION],
                   help="comma-separated molar concentrations applied to every present chemical")
    p.add_argument("--lambda-ex", type=_floats, default=[],
                   help="comma-separated excitation wavelengths; default each chemical's own")
    p.add_argument("--intensity", type=float, default=1.0, help="incident intensity I_o")
    p.add_argument("--limit", type=_positive_int, help="stop after this many samples")
    p.add_argument("--stray-fraction", type=float, default=0.0)
    p.add_argument("--shift-nm", type=float, default=0.0)
    p.add_argument("--force", action="store_true")
    _add_noise_flags(p)
    p.set_defaults(func=cmd_generate)

    p = command("validate", "measure a noise model against the distribution guidelines")
    p.add_argument("--bundle")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-samples", type=_positive_int, default=6000)
    p.add_argument("--sweep", type=_floats, help="comma-separated eta values; overrides --eta")
    p.add_argument("--concentration", type=float, default=DEFAULT_CONCENTRATION)
    p.add_argument("--kind", choices=("absorption", "emission"), default="absorption")
    p.add_argument("--mean-gate", type=float, default=MEAN_GATE)
    p.add_argument("--skew-gate", type=float, default=SKEW_GATE)
    p.add_argument("--bins", type=_positive_int, default=50)
    p.add_argument("--force", action="store_true")
    _add_noise_flags(p)
    p.set_defaults(func=cmd_validate)

    p = command("tune-p", "choose the compression probability that balances E_win")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", type=float, default=1.0)
    p.add_argument("--realizations", type=_positive_int, default=100_000)
    p.add_argument("--out", help="also write the E_win table CSV here")
    _add_noise_flags(p)
    p.set_defaults(func=cmd_tune_p)
    return parser


# ---------------------------------------------------------------------------
# Helpers


def _require(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _run_config(args) -> dict:
    cfg = {"fluorosynth": __version__}
    for key, value in sorted(vars(args).items()):
        if key in _UNRECORDED:
            continue
        if key in ("manifest", "bundle") and value is not None:
            value = str(Path(value).resolve())
        cfg[key] = value
    return cfg


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


@contextmanager
def atomic_dir(out: str | Path, force: bool) -> Iterator[Path]:
    """Build into a sibling temp directory and rename it into place on success."""
    out = Path(out)
    if out.exists() and not force:
        raise UsageError(f"output directory {out} exists (use --force to replace it)")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        yield tmp
        if out.exists():
            shutil.rmtree(out)
        tmp.rename(out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_bundle(bundle: str | Path):
    bundle = Path(bundle)
    try:
        lock = json.loads((bundle / LOCK_NAME).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{bundle} is not an ingested bundle: {exc}") from None
    return load_manifest(bundle / "manifest.json", tuple(lock["pad_range_nm"]))


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(args) -> int:
    _require(args, "manifest", "out")
    low, high = args.range
    if not low < high:
        raise UsageError(f"empty wavelength range [{low}, {high}]")
    manifest = Path(args.manifest)
    records = load_manifest(manifest, (low, high))
    raw = json.loads(manifest.read_text(encoding="utf-8"))
    inputs = {manifest.name: _sha256(manifest)}
    for entry in raw:
        for key in ("absorption_csv", "emission_csv"):
            inputs[entry[key]] = _sha256(manifest.parent / entry[key])

    with atomic_dir(args.out, args.force) as tmp:
        (tmp / "spectra").mkdir()
        entries = []
        for i, rec in enumerate(records, start=1):
            ab, em = f"spectra/{i:03d}_abs.csv", f"spectra/{i:03d}_em.csv"
            (tmp / ab).write_text(spectrum_csv_text(rec.absorption), encoding="utf-8")
            (tmp / em).write_text(spectrum_csv_text(rec.emission), encoding="utf-8")
            entries.append(record_to_entry(rec, ab, em))
        (tmp / "manifest.json").write_text(_json_text(entries), encoding="utf-8")
        grid = records[0].absorption.grid if records else None
        lock = {
            "grid": None if grid is None else
            {"start_nm": grid.start, "step_nm": grid.step, "count": grid.count},
            "pad_range_nm": [low, high],
            "n_records": len(records),
            "inputs_sha256": inputs,
        }
        (tmp / LOCK_NAME).write_text(_json_text(lock), encoding="utf-8")
        (tmp / "run.json").write_text(_json_text(_run_config(args)), encoding="utf-8")
    print(f"ingested {len(records)} record(s) into {args.out}")
    return EXIT_OK


def _warn_constraints(params: NoiseParams, model: str) -> None:
    if model == "optimized":
        report = check_constraints(params)
        if not report.all_pass:
            print(f"warning: noise constraints violated: {report}", file=sys.stderr)


def cmd_generate(args) -> int:
    _require(args, "bundle", "out", "seed")
    params = _noise_params(args)
    if args.stray_fraction < 0:
        raise UsageError("--stray-fraction must be >= 0")
    if not args.concentrations or any(c <= 0 for c in args.concentrations):
        raise UsageError("--concentrations must be positive")
    db = load_bundle(args.bundle)
    if not db:
        raise ManifestError("bundle holds no chemicals")
    n = len(db)
    try:
        codes = enumerate_mixtures(n, args.k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _warn_constraints(params, args.model)
    lambdas = args.lambda_ex or [None]

    with atomic_dir(args.out, args.force) as tmp:
        (tmp / "samples").mkdir()
        labels = ["id,code_binary,code_int,lambda_ex_nm,incident_intensity,concentrations"]
        index = 0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for code in codes:
                for conc in args.concentrations:
                    for lam in lambdas:
                        if args.limit is not None and index >= args.limit:
                            break
                        spec = MixtureSpec.uniform(
                            code, n, conc, lambda_ex=lam, incident_intensity=args.intensity
                        )
                        sid = f"s{index:06d}"
                        _write_sample(tmp / "samples", sid, db, spec, args, params, index)
                        conc_text = ";".join(
                            f"{db[j].name}={format_float(c)}"
                            for j, c in zip(spec.present(), spec.concentrations)
                        )
                        labels.append(",".join([
                            sid, code_binary(code, n), str(code),
                            "native" if lam is None else format_float(lam),
                            format_float(args.intensity), _csv_field(conc_text),
                        ]))
                        index += 1
        (tmp / "labels.csv").write_text("\n".join(labels) + "\n", encoding="utf-8")
        (tmp / "run.json").write_text(_json_text(_run_config(args)), encoding="utf-8")
    print(f"wrote {index} sample(s) to {args.out}")
    return EXIT_OK


def _csv_field(text: str) -> str:
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _write_sample(folder: Path, sid: str, db, spec, args, params, index: int) -> None:
    absorption, emission = synthesize_sample(db, spec)
    for stream, tag, clean in ((0, "abs", absorption), (1, "em", emission)):
        noisy, _ = apply_noise(clean, args.model, params, substream(params.seed, index, stream))
        if tag == "abs" and args.stray_fraction > 0:
            noisy = stray_light(noisy, args.stray_fraction)
        if args.shift_nm:
            noisy = wavelength_shift(noisy, args.shift_nm)
        (folder / f"{sid}_{tag}.csv").write_text(spectrum_csv_text(clean), encoding="utf-8")
        (folder / f"{sid}_{tag}_noisy.csv").write_text(spectrum_csv_text(noisy), encoding="utf-8")


def cmd_validate(args) -> int:
    _require(args, "bundle", "out", "seed")
    params = _noise_params(args)
    db = load_bundle(args.bundle)
    if not db:
        raise ManifestError("bundle holds no chemicals")
    _warn_constraints(params, args.model)
    etas = args.sweep if args.sweep else [params.eta]
    if any(not 0 <= e <= 1 for e in etas):
        raise UsageError("eta values must lie in [0, 1]")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        studies = run_sweep(
            db, args.model, params, etas, args.n_samples,
            concentration=args.concentration, kind=args.kind,
        )
    guidelines = guideline_report(studies, mean_gate=args.mean_gate, skew_gate=args.skew_gate)
    report = study_report(studies[0] if len(studies) == 1 else studies, guidelines)

    with atomic_dir(args.out, args.force) as tmp:
        (tmp / "report.json").write_text(_json_text(report), encoding="utf-8")
        for s in studies:
            tag = f"eta{format_float(s.params.eta)}"
            elem = s.nonzero_element_deltas()
            h = histogram(elem, args.bins, symmetric_range(elem))
            (tmp / f"hist_element_{tag}.csv").write_text(h.csv_text(), encoding="utf-8")
            h = histogram(s.delta_vector, args.bins, symmetric_range(s.delta_vector))
            (tmp / f"hist_vector_{tag}.csv").write_text(h.csv_text(), encoding="utf-8")
        (tmp / "run.json").write_text(_json_text(_run_config(args)), encoding="utf-8")

    for g, verdict in guidelines.items():
        print(f"{g}: {verdict}")
    return EXIT_GUIDELINE if FAIL in guidelines.values() else EXIT_OK


def cmd_tune_p(args) -> int:
    params = _noise_params(args)
    means = window_triple_means(params, args.realizations, args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = bisect_p(means.e_win, args.target)
    for w in caught:
        if issubclass(w.category, TargetUnreachable):
            print(f"warning: {w.message}; returning boundary p", file=sys.stderr)
    rows = ["p,e_win"] + [
        f"{format_float(p)},{format_float(means.e_win(p))}"
        for p in np.round(np.linspace(0.0, 1.0, 11), 10)
    ]
    table = "\n".join(rows) + "\n"
    print(f"p* = {result.p:.6f}")
    print(f"E_win(p*) = {result.e_win:.6f}")
    print(table, end="")
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if cfg.get("command") != args.command:
            raise UsageError(f"config is for {cfg.get('command')!r}, not {args.command!r}")
        sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        known = {a.dest for a in sub._actions}  # noqa: SLF001
        sub.set_defaults(**{k: v for k, v in cfg.items() if k in known and k not in _UNRECORDED})
        args = parser.parse_args(argv)
    return args


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"fluorosynth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fluorosynth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ManifestError, SpectrumError, OSError, ValueError) as exc:
        print(f"fluorosynth: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
