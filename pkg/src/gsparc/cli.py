"""Command-line interface: ``gsparc <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .code import CodeInstance, CodeSpec
from .config import parse_spec, run_experiment, schema_text, serialize
from .decoding import DecoderSpec, check_recovery_guarantee
from .dictionary import build_dictionary, correlation_census
from .encoding import SparseCodeword, bits_to_hex, hex_to_bits, make_codeword
from .errors import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _code_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", type=Path, help="experiment/code JSON document")
    p.add_argument("--dict", choices=["gold", "mub"])
    p.add_argument("--n", type=int)
    p.add_argument("--scheme", choices=["sse", "sfe"])
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--offset", action="store_true", default=None)
    p.add_argument("--columns", type=int)
    p.add_argument("--identity-columns", type=int, dest="identity_columns")


def _decoder_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--decoder", choices=["mad", "pmad", "omp"])
    p.add_argument("--T", type=int)


_OVERRIDES = ("dict", "n", "scheme", "K", "M", "offset", "columns", "identity_columns",
              "decoder", "T", "max_trials", "max_errors", "seed", "users")


def _document(args) -> dict:
    """Spec document from ``--spec`` with command-line flags overriding fields."""
    doc = {}
    if getattr(args, "spec", None) is not None:
        try:
            doc = json.loads(args.spec.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {args.spec}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.spec}: invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{args.spec}: top level must be an object")
    for key in _OVERRIDES:
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    if getattr(args, "sweep", None) is not None:
        doc["sweep"] = args.sweep
    return doc


def _code(args) -> CodeInstance:
    return CodeInstance(parse_spec(_document(args)).code_spec)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, default=str))


def _codeword_json(code: CodeInstance, cw: SparseCodeword) -> dict:
    out = {"support": [int(v) for v in cw.support],
           "symbol_indices": [int(v) for v in cw.symbol_indices]}
    if cw.s is not None:
        out["s_real"] = np.real(cw.s).tolist()
        if code.field == "complex":
            out["s_imag"] = np.imag(cw.s).tolist()
    return out


def _read_json(path: Path) -> dict:
    try:
        text = sys.stdin.read() if str(path) == "-" else path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None


# ------------------------------------------------------------------ commands

def cmd_dict(args) -> int:
    A = build_dictionary(args.kind, args.n, args.columns, args.identity_columns or 0)
    out = {"label": A.label, "N": A.N, "L": A.L, "field": A.field, "mu": A.mu,
           "mu_times_sqrtN": A.mu * np.sqrt(A.N)}
    if args.census:
        out["census"] = correlation_census(A)
    _emit(out)
    return EXIT_OK


def cmd_encode(args) -> int:
    code = _code(args)
    bits = hex_to_bits(args.message, code.n_bits)
    cw = code.encode(bits)
    out = {"code": code.label, "n_bits": code.n_bits, "message": bits_to_hex(bits)}
    out.update(_codeword_json(code, cw))
    _emit(out)
    return EXIT_OK


def cmd_decode_bits(args) -> int:
    code = _code(args)
    support = [int(v) for v in args.support.split(",")]
    syms = [int(v) for v in args.symbols.split(",")]
    if len(support) != code.K or len(syms) != code.K:
        raise ConfigError(f"need {code.K} support entries and symbol indices")
    order = np.argsort(support, kind="stable")
    support = [support[i] for i in order]
    syms = [syms[i] for i in order]
    cons = code.block_constellations
    if code.partition is not None:
        blocks = [code.partition.block_of(c) for c in support]
        if any(b < 0 for b in blocks):
            raise ConfigError("support uses a column outside every sub-block")
        cw_cons = [cons[b] for b in blocks]
    else:
        cw_cons = [cons[0]] * code.K
    try:
        cw = make_codeword(code.A, support, syms, cw_cons)
        bits = code.decode_bits(cw)
    except (ValueError, IndexError) as exc:
        raise ConfigError(str(exc)) from None
    _emit({"code": code.label, "message": bits_to_hex(bits),
           "bits": "".join(map(str, bits))})
    return EXIT_OK


def cmd_decode(args) -> int:
    code = _code(args)
    doc = _read_json(args.input)
    try:
        y = np.asarray(doc["y_real"], dtype=float)
        if "y_imag" in doc:
            y = y + 1j * np.asarray(doc["y_imag"], dtype=float)
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"{args.input}: expected arrays 'y_real' (and 'y_imag')") from None
    if y.shape != (code.N,):
        raise ConfigError(f"observation must have length {code.N}, got {y.shape}")
    dec = DecoderSpec(args.decoder or "mad", args.T or 1)
    cw = code.decode(y, dec)
    out = {"code": code.label, "decoder": dec.label}
    out.update(_codeword_json(code, cw))
    out.pop("s_real", None)
    out.pop("s_imag", None)
    try:
        out["message"] = bits_to_hex(code.decode_bits(cw))
    except ValueError as exc:
        out["message"] = None
        out["note"] = str(exc)
    _emit(out)
    return EXIT_OK


def _cmd_sim(args, mode: str | None) -> int:
    doc = _document(args)
    if mode is not None:
        current = doc.get("mode", "single")
        allowed = ("interference", "broadcast") if mode == "interference" else (mode,)
        doc["mode"] = current if current in allowed else mode
    spec = parse_spec(doc)
    if args.print_spec:
        sys.stdout.write(serialize(spec))
        return EXIT_OK
    manifest = run_experiment(spec, args.out, dry_run=args.dry_run)
    _emit(manifest)
    return EXIT_OK


def cmd_guarantee(args) -> int:
    if args.mu is not None:
        mu = args.mu
        gamma = args.gamma
        K = args.K
        if gamma is None or K is None:
            raise ConfigError("--mu needs --gamma and --K")
    else:
        code = _code(args)
        mu, gamma, K = code.A.mu, code.gamma, code.K
    try:
        report = check_recovery_guarantee(mu, gamma, K)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit(report.to_dict())
    return EXIT_OK


def cmd_schema(args) -> int:
    sys.stdout.write(schema_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gsparc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"gsparc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dict", help="build a dictionary and report N, L and coherence")
    p.add_argument("kind", choices=["gold", "mub"])
    p.add_argument("n", type=int)
    p.add_argument("--columns", type=int)
    p.add_argument("--identity-columns", type=int, dest="identity_columns")
    p.add_argument("--census", action="store_true", help="histogram of column correlations")
    p.set_defaults(func=cmd_dict)

    p = sub.add_parser("encode", help="encode a hex message")
    _code_args(p)
    p.add_argument("message", help="message value in hex (most significant bit first)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode-bits", help="map a support and symbol indices back to bits")
    _code_args(p)
    p.add_argument("--support", required=True, help="comma-separated column indices")
    p.add_argument("--symbols", required=True, help="comma-separated symbol indices")
    p.set_defaults(func=cmd_decode_bits)

    p = sub.add_parser("decode", help="decode an observation from a JSON file ('-' for stdin)")
    _code_args(p)
    _decoder_args(p)
    p.add_argument("input", type=Path)
    p.set_defaults(func=cmd_decode)

    for name, mode, text in (("bler", None, "single-user BLER sweep"),
                             ("mac", "mac", "multiple-access BLER sweep"),
                             ("interference", "interference",
                              "interference/broadcast BLER sweep")):
        p = sub.add_parser(name, help=text)
        _code_args(p)
        _decoder_args(p)
        p.add_argument("--sweep", type=float, nargs="+", help="Eb/N0 points in dB")
        p.add_argument("--max-trials", type=int, dest="max_trials")
        p.add_argument("--max-errors", type=int, dest="max_errors")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path stem")
        p.add_argument("--dry-run", action="store_true", help="validate without simulating")
        p.add_argument("--print-spec", action="store_true",
                       help="print the normalised document and exit")
        if mode is not None:
            p.add_argument("--users", type=int, help="number of users (even split)")
        p.set_defaults(func=lambda a, m=mode: _cmd_sim(a, m))

    p = sub.add_parser("guarantee", help="noiseless recovery condition for MAD")
    _code_args(p)
    p.add_argument("--mu", type=float)
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_guarantee)

    p = sub.add_parser("schema", help="print the experiment JSON schema")
    p.set_defaults(func=cmd_schema)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"gsparc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError, MemoryError, ValueError) as exc:
        print(f"gsparc: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
