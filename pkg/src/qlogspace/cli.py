"""Command-line entry point: ``qlogspace <command> ...`` prints a JSON run report.

Exit codes: 0 success, 2 invalid input, 3 promise-gap violation.
"""
from __future__ import annotations

import argparse
import sys
import zlib
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import block_encoding as be
from . import jsonio
from .channels import output_distribution, simulate_unital
from .circuit import circuit_unitary, UNITARY_DIM_LIMIT
from .exceptions import GapViolation, ValidationError
from .learning import distinguish, estimated_contraction, singleton_distinguish
from .powering import PoweringInstance, general_power, oracle_value, powering_circuit, powering_prob
from .suites import SUITES, run_suites
from .synthesis import Permutation, compose, decompose, perm_circuit
from .validation import is_unitary

EXIT_OK, EXIT_INVALID, EXIT_GAP = 0, 2, 3


def substream(seed: int, name: str) -> np.random.Generator:
    """Named child stream of the root seed."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


@dataclass
class RunReport:
    command: str
    inputs: dict
    estimate: Any = None
    oracle: Any = None
    resource: dict = field(default_factory=dict)
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def abs_error(self):
        if self.estimate is None or self.oracle is None:
            return None
        est, ora = np.asarray(self.estimate), np.asarray(self.oracle)
        err = np.abs(est - ora)
        return float(err) if err.ndim == 0 else err.tolist()

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "inputs": self.inputs,
            "estimate": self.estimate,
            "oracle": self.oracle,
            "abs_error": self.abs_error(),
            "resource": {"total_dim": None, "gate_count": None, "samples_used": None, **self.resource},
            "seed": self.seed,
        }
        out.update(self.extra)
        return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _load_matrix(path):
    return jsonio.matrix_from_json(jsonio.load_json(path))


def _load_vector(path):
    return jsonio.vector_from_json(jsonio.load_json(path))


def _cmd_power(args) -> RunReport:
    A = _load_matrix(args.matrix)
    v, w = _load_vector(args.v), _load_vector(args.w)
    inputs = {"T": args.T, "eps": args.eps, "mode": args.mode, "general": args.general}
    if args.general:
        est = general_power(A, args.T, v, w, args.eps, mode=args.mode, seed=substream(args.seed, "general"))
        ora = oracle_value(A, args.T, v, w)
        bound = args.eps * max(1.0, np.linalg.norm(A, 2) ** args.T)
        return RunReport("power", inputs, est, ora, {}, args.seed, {"error_bound": bound})
    inst = PoweringInstance(A, args.T, v, w, args.eps)
    resource = {}
    if args.mode != "exact":
        pc = powering_circuit(inst, args.mode)
        resource = {"total_dim": pc.layout.total_dim, "gate_count": pc.circuit.gate_count}
    est = powering_prob(inst, args.mode)
    return RunReport("power", inputs, est, inst.oracle_prob(), resource, args.seed)


def _cmd_block_encode(args) -> RunReport:
    A = _load_matrix(args.matrix)
    enc = be.block_encoding_circuit(A, args.eps, ell=args.ell)
    err = be.verify_block_encoding(enc, trials=args.trials, seed=substream(args.seed, "block-encode"))
    resource = {"total_dim": enc.circuit.layout.total_dim, "gate_count": enc.gate_count}
    extra = {"ell": enc.ell, "max_error": err, "within_eps": err <= args.eps}
    return RunReport("block-encode", {"eps": args.eps, "trials": args.trials}, None, None, resource, args.seed, extra)


def _cmd_simulate_channel(args) -> RunReport:
    prog = jsonio.program_from_json(jsonio.load_json(args.program))
    res = simulate_unital(prog, args.eps, args.mode)
    extra = {"sin2": res.sin2, "padded_space": res.space, "rounds": res.rounds}
    return RunReport("simulate-channel", {"eps": args.eps, "mode": args.mode}, res.p_hat, res.p_oracle, {}, args.seed, extra)


def _cmd_distribution(args) -> RunReport:
    prog = jsonio.program_from_json(jsonio.load_json(args.program))
    res = output_distribution(prog, args.eps, args.mode, seed=substream(args.seed, "distribution"))
    extra = {"amplitudes": res.amplitudes, "l1_error": float(np.abs(res.probs - res.oracle).sum())}
    return RunReport("distribution", {"eps": args.eps, "mode": args.mode}, res.probs, res.oracle, {}, args.seed, extra)


def _cmd_learn(args) -> RunReport:
    src = jsonio.source_from_json(jsonio.load_json(args.source))
    rng = substream(args.seed, "learn")
    inputs = {"mode": args.mode, "T": args.T, "trials": args.trials}
    if args.mode == "singleton":
        if not args.reference:
            raise ValidationError("singleton mode needs --reference")
        ref = jsonio.source_from_json(jsonio.load_json(args.reference))
        B = ref.mean_natural_rep()
        truth = "Y" if np.allclose(src.mean_natural_rep(), B, atol=1e-12) else "X"
        results = [singleton_distinguish(src, B, args.T, rng) for _ in range(args.trials)]
        labels = [r.label for r in results]
        extra = {"labels": labels, "expected": truth, "max_deviation": [r.max_deviation for r in results]}
        rate = sum(lbl == truth for lbl in labels) / len(labels)
        samples = sum(r.samples_used for r in results)
    else:
        m = src.m
        M0 = np.asarray(args.measurement if args.measurement else _default_m0(m), dtype=float)
        labels, consistent, oracle = [], [], None
        for _ in range(args.trials):
            res = distinguish(src, args.T, M0, rng)
            labels.append(res.label)
            oracle = res.oracle
        truth = "X" if oracle >= 0.75 else "Y"
        samples = 0
        for _ in range(args.trials):
            est = estimated_contraction(src, args.T, rng)
            consistent.append(est.consistent)
            samples += est.samples_used
        rate = sum(lbl == truth for lbl in labels) / len(labels)
        extra = {"labels": labels, "expected": truth, "acceptance_oracle": oracle,
                 "replay_consistency": sum(consistent) / len(consistent)}
    extra["success_rate"] = rate
    return RunReport("learn", inputs, None, None, {"samples_used": samples}, args.seed, extra)


def _default_m0(m: int) -> np.ndarray:
    d = np.zeros(m)
    d[: m // 2] = 1.0
    return d


def _cmd_perm(args) -> RunReport:
    if args.images:
        try:
            images = tuple(int(x) for x in args.images.split(","))
        except ValueError:
            raise ValidationError(f"bad --images {args.images!r}") from None
        sigma = Permutation(images)
    elif args.perm:
        sigma = jsonio.permutation_from_json(jsonio.load_json(args.perm))
    else:
        raise ValidationError("perm needs --images or --perm")
    ts = decompose(sigma)
    composed_ok = compose(ts, sigma.m) == sigma
    circuit = perm_circuit(sigma, sigma.m) if sigma.m >= 2 else None
    unitary_ok = True
    if circuit is not None and sigma.m <= UNITARY_DIM_LIMIT:
        unitary_ok = bool(np.abs(circuit_unitary(circuit) - sigma.matrix()).max() <= 1e-9)
    extra = {"transpositions": [[t.a, t.b] for t in ts], "verified": composed_ok and unitary_ok}
    resource = {"total_dim": sigma.m, "gate_count": circuit.gate_count if circuit else 0}
    return RunReport("perm", {"images": list(sigma.images)}, None, None, resource, args.seed, extra)


def _cmd_verify(args) -> RunReport:
    extra: dict = {}
    passed = True
    if args.circuit:
        circuit = jsonio.circuit_from_json(jsonio.load_json(args.circuit))
        info = {"total_dim": circuit.layout.total_dim, "gate_count": circuit.gate_count}
        if circuit.layout.total_dim <= UNITARY_DIM_LIMIT:
            info["unitary"] = is_unitary(circuit_unitary(circuit), 1e-8)
            passed = passed and info["unitary"]
        extra["circuit"] = info
    if args.suite or not args.circuit:
        names = ["all"] if not args.suite or args.suite == "all" else args.suite.split(",")
        unknown = [n for n in names if n != "all" and n not in SUITES]
        if unknown:
            raise ValidationError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)} or all")
        suites = run_suites(names, args.seed)
        extra["suites"] = suites
        passed = passed and all(r["passed"] for r in suites.values())
    extra["passed"] = passed
    return RunReport("verify", {"suite": args.suite, "circuit": args.circuit}, None, None, {}, args.seed, extra)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qlogspace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("power", help="contraction / general matrix powering"))
    p.add_argument("--matrix", required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--w", required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--mode", choices=["exact", "ideal", "circuit"], default="ideal")
    p.add_argument("--general", action="store_true")
    p.set_defaults(func=_cmd_power)

    p = common(sub.add_parser("block-encode", help="build and verify Q_A"))
    p.add_argument("--matrix", required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=_cmd_block_encode)

    p = common(sub.add_parser("simulate-channel", help="amplified unital program simulation"))
    p.add_argument("--program", required=True)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--mode", choices=["exact", "ideal", "circuit"], default="exact")
    p.set_defaults(func=_cmd_simulate_channel)

    p = common(sub.add_parser("distribution", help="output distribution of a unital program"))
    p.add_argument("--program", required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--mode", choices=["exact", "ideal", "circuit"], default="exact")
    p.set_defaults(func=_cmd_distribution)

    p = common(sub.add_parser("learn", help="bounded-memory learner simulation"))
    p.add_argument("--mode", choices=["pair", "singleton"], default="pair")
    p.add_argument("--source", required=True)
    p.add_argument("--reference", help="singleton reference source JSON")
    p.add_argument("--T", type=int, default=2)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--measurement", type=lambda s: [float(x) for x in s.split(",")],
                   help="diagonal of M0, comma separated")
    p.set_defaults(func=_cmd_learn)

    p = common(sub.add_parser("perm", help="transposition decomposition of a permutation"))
    p.add_argument("--images", help="1-based images, e.g. 2,3,1")
    p.add_argument("--perm", help="permutation JSON file")
    p.set_defaults(func=_cmd_perm)

    p = common(sub.add_parser("verify", help="invariant suites and circuit checks"))
    p.add_argument("--suite", help="comma-separated suite names or 'all'")
    p.add_argument("--circuit", help="circuit JSON file")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        report = args.func(args)
    except GapViolation as exc:
        print(f"gap violation: {exc}", file=sys.stderr)
        return EXIT_GAP
    except (ValidationError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(jsonio.dumps(report.to_dict()))
    if report.command == "verify" and not report.extra.get("passed", False):
        return 1
    return EXIT_OK


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
