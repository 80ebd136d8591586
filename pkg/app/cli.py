import argparse
import json
import sys
from typing import Any, Dict, List, Optional

from app.config import config
from app.experiments.lab import LabOrchestrator
from app.tools.profile import make_profile
from app.utils.emit import frame_to_csv, profile_frame
from app.utils.errors import LabError
from app.utils.logger import logger


def _parse_overrides(items: Optional[List[str]]) -> Dict[str, Any]:
    """KEY=VALUE pairs for SimConfig; values are read as JSON when possible."""
    overrides: Dict[str, Any] = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {item!r}")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m app", description="Critical Fujita exponent lab")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_sim(p: argparse.ArgumentParser) -> None:
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="simulation override, e.g. --set h=0.2 --set xmax=100")

    def with_out(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default=None, help="directory for CSV/SVG artifacts")

    p = sub.add_parser("profile", help="ground state, potential and harmonic coordinate")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--xmax", type=float, default=10.0)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--emit", choices=["json", "csv"], default="json",
                   help="csv prints the columns x, psi, psi_prime, V, H instead of the JSON summary")
    with_out(p)

    p = sub.add_parser("exponent", help="critical exponent and regime")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--m", type=float, default=0.0)
    p.add_argument("--p", type=float, default=None)

    p = sub.add_parser("decay", help="linear semigroup decay rates")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--q1", type=float, default=1.0)
    p.add_argument("--q2", type=float, default=float("inf"))
    p.add_argument("--tend", "--t-end", dest="t_end", type=float, default=1000.0)
    p.add_argument("--window", type=float, nargs=2, metavar=("T_LO", "T_HI"), default=None)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--energy", action="store_true", help="fit |L^{1/2} v|_2 instead of the q2 norm")
    with_sim(p)
    with_out(p)

    p = sub.add_parser("kernel", help="upper bound of the semigroup acting on <x>^{-1-alpha}")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float, default=config.KERNEL_DELTA)
    p.add_argument("--tend", "--t-end", dest="t_end", type=float, default=1000.0)
    p.add_argument("--diagnostic", action="store_true", help="allow delta outside the admissible range")
    with_sim(p)

    p = sub.add_parser("run", help="one nonlinear run")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--m", type=float, default=0.0)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--amp", "--amplitude", dest="amplitude", type=float, required=True)
    p.add_argument("--width", type=float, default=2.0)
    p.add_argument("--localized-source", "--localized", dest="localized", type=float, default=None, metavar="WIDTH",
                   help="use a compactly supported source weight of this half-width")
    p.add_argument("--compare-linear", action="store_true")
    p.add_argument("--plot", default=None, metavar="OUT.svg", help="write the norm-decay plot here")
    with_sim(p)
    with_out(p)

    p = sub.add_parser("ineq", help="functional inequality constants over a test family")
    p.add_argument("--kind", choices=["nash", "hardy", "wnash"], default="nash")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--family", default="default", help="default | gaussians | bumps | psi_modulated")
    p.add_argument("--diagnostic", action="store_true")
    with_out(p)

    p = sub.add_parser("testfn", help="test-function bound constant")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--R", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=401)

    p = sub.add_parser("sweep", help="phase diagram over (p, amplitude)")
    p.add_argument("--config", required=True, help="JSON file with the sweep spec")
    p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    p.add_argument("--jobs", type=int, default=None)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _payload(args: argparse.Namespace) -> Dict[str, Any]:
    cmd = args.command
    if cmd == "profile":
        return {"alpha": args.alpha, "xmax": args.xmax, "n": args.n}
    if cmd == "exponent":
        return {"alpha": args.alpha, "m": args.m, "p": args.p}
    if cmd == "decay":
        return {"alpha": args.alpha, "q1": args.q1, "q2": args.q2, "t_end": args.t_end,
                "window": args.window, "width": args.width, "energy": args.energy,
                "sim": _parse_overrides(args.set)}
    if cmd == "kernel":
        return {"alpha": args.alpha, "delta": args.delta, "t_end": args.t_end,
                "diagnostic": args.diagnostic, "sim": _parse_overrides(args.set)}
    if cmd == "run":
        return {"alpha": args.alpha, "m": args.m, "p": args.p, "amplitude": args.amplitude,
                "width": args.width, "localized_source": args.localized,
                "compare_linear": args.compare_linear, "plot": args.plot, "sim": _parse_overrides(args.set)}
    if cmd == "ineq":
        return {"kind": args.kind, "alpha": args.alpha, "family": args.family, "diagnostic": args.diagnostic}
    if cmd == "testfn":
        return {"alpha": args.alpha, "p": args.p, "R": args.R, "samples": args.samples}
    raise ValueError(f"no payload for {cmd}")


def _serve(host: str, port: int) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=host, port=port, log_level=config.LOG_LEVEL.lower())
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        return _serve(args.host, args.port)

    try:
        config.validate()
        if args.command == "sweep":
            with open(args.config, encoding="utf-8") as handle:
                payload = json.load(handle)
            document = LabOrchestrator(jobs=args.jobs).run("sweep", payload, args.out)
        else:
            payload = _payload(args)
            document = LabOrchestrator().run(args.command, payload, getattr(args, "out", None))
            if args.command == "profile" and args.emit == "csv":
                frame = profile_frame(make_profile(args.alpha), args.xmax, args.n)
                sys.stdout.write(frame_to_csv(frame))
                return 0
    except argparse.ArgumentTypeError as e:
        parser.error(str(e))
    except (LabError, OSError, ValueError) as e:
        logger.error(f"Command {args.command} failed: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return 2

    print(json.dumps(document, indent=2))
    if args.command == "sweep" and document["result"]["errored"]:
        return 1
    return 0
