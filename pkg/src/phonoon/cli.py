"""Command-line front end.

Subcommands: generate | run | parity-scan | fit-phonon | project-pop |
align-phase | report | selftest. Angles are accepted in pi-units ("0.5pi")
or radians; emitted files always use radians. Every artifact embeds the
manifest hash of the invocation, and a sidecar <out>.manifest.json records
the config snapshot, seed, wall time and artifact hashes. Identical
invocations with the same seed reproduce artifacts byte-identically.

Exit codes: 0 ok, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .hamiltonians import PAPER_SYSTEM, SystemConfig, load_config_file, apply_env_overrides
from .hilbert import DOWN, StateVector, basis_state, check_leakage, make_space, space_for_noon
from .measure import (
    align_phase,
    find_optimal_duration,
    fit_phonon_distribution,
    parity_scan,
    projective_population,
    scan_to_csv,
    signal_from_csv,
)
from .metrology import MetrologyReport, fit_parity_fringe
from .noise import NoiseConfig, noisy_generation
from .pulses import (
    apply_sequence,
    generate_noon,
    noon_fidelity,
    noon_phase,
    noon_sequence,
    parse_angle,
    parse_sequence,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


def _float17(x):
    if isinstance(x, float):
        return float(format(x, ".17g"))
    return x


def _json_text(obj) -> str:
    def default(o):
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not JSON serializable: {type(o)}")

    return json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n"


def _load_configs(path: str | None):
    if path is None:
        sys_cfg = SystemConfig.from_dict(apply_env_overrides("system", {}))
        noise_cfg = NoiseConfig.from_dict(apply_env_overrides("noise", {}))
        return sys_cfg, noise_cfg
    raw = load_config_file(path)
    sys_cfg = SystemConfig.from_dict(
        apply_env_overrides("system", raw.get("system", {})))
    noise_cfg = NoiseConfig.from_dict(
        apply_env_overrides("noise", raw.get("noise", {})))
    return sys_cfg, noise_cfg


class Manifest:
    """Deterministic invocation snapshot plus post-run artifact records."""

    def __init__(self, subcommand: str, args: dict, sys_cfg: SystemConfig,
                 noise_cfg: NoiseConfig, seed):
        arg_items = {k: v for k, v in args.items()
                     if k not in ("func", "command") and not callable(v)}
        self.payload = {
            "tool": f"phonoon {__version__}",
            "subcommand": subcommand,
            "args": {k: _float17(v) for k, v in sorted(arg_items.items())},
            "system": {k: _float17(v) for k, v in
                       dataclasses.asdict(sys_cfg).items()},
            "noise": {k: _float17(v) for k, v in
                      dataclasses.asdict(noise_cfg).items()},
            "seed": seed,
        }
        digest = hashlib.sha256(
            json.dumps(self.payload, sort_keys=True).encode()).hexdigest()
        self.hash = digest[:16]
        self.outputs = {}
        self._t0 = time.monotonic()

    def write_text(self, path: Path, text: str):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.outputs[str(path)] = hashlib.sha256(text.encode()).hexdigest()

    def write_json(self, path: Path, obj: dict):
        obj = dict(obj)
        obj["manifest_hash"] = self.hash
        self.write_text(path, _json_text(obj))

    def finalize(self, out_path: Path | None):
        if out_path is None:
            return
        record = dict(self.payload)
        record["manifest_hash"] = self.hash
        record["outputs"] = self.outputs
        record["wall_time_s"] = time.monotonic() - self._t0
        side = Path(str(out_path) + ".manifest.json")
        side.write_text(_json_text(record))


def _shots_arg(value: str):
    if value == "exact":
        return None
    shots = int(value)
    if shots < 1:
        raise UsageError("shots must be a positive integer or 'exact'")
    return shots


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args, sys_cfg, noise_cfg) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    manifest = Manifest("generate", vars(args), sys_cfg, noise_cfg, noise_cfg.seed)
    seq = noon_sequence(args.n)
    report = {
        "N": args.n,
        "pulse_count": seq.primitive_pulse_count,
    }
    if args.noise:
        rho = noisy_generation(args.n, noise_cfg, args.shots, sys_cfg)
        from .metrology import fidelity_direct

        state_json = None
        phis = np.linspace(0.0, 2 * np.pi, args.points, endpoint=False)
        fit = fit_parity_fringe(parity_scan(rho, phis), k_init=args.n)
        i = rho.space.index(DOWN, args.n, 0)
        j = rho.space.index(DOWN, 0, args.n)
        phi_s = float(np.angle(rho.matrix[j, i]) / args.n % (2 * np.pi / args.n))
        report.update({
            "noise": True,
            "shots": args.shots,
            "C_P": fit.c_p,
            "k": fit.k,
            "phi_s": phi_s,
            "fidelity_vs_aligned_ideal": fidelity_direct(rho, args.n, phi_s),
        })
    else:
        state = generate_noon(args.n)
        state_json = state.to_json_dict()
        report.update({
            "noise": False,
            "phi_s": noon_phase(state, args.n),
            "fidelity_vs_aligned_ideal": noon_fidelity(state, args.n),
            "truncation_leakage": check_leakage(state),
        })
    out = Path(args.out)
    manifest.write_json(out, report)
    if state_json is not None and args.state_out:
        manifest.write_json(Path(args.state_out), state_json)
    manifest.finalize(out)
    print(f"N={args.n}: {report['pulse_count']} pulses, "
          f"F={report['fidelity_vs_aligned_ideal']:.6f}, "
          f"phi_s={report['phi_s'] / np.pi:.4f}pi -> {out}")
    return EXIT_OK


def cmd_run(args, sys_cfg, noise_cfg) -> int:
    text = Path(args.sequence).read_text()
    seq = parse_sequence(text)
    if args.state_in:
        state = StateVector.from_json_dict(json.loads(Path(args.state_in).read_text()))
    else:
        space = make_space(args.dx, args.dy)
        state = basis_state(space, DOWN, 0, 0)
    manifest = Manifest("run", vars(args), sys_cfg, noise_cfg, None)
    final = apply_sequence(state, seq, cfg=sys_cfg)
    out = Path(args.out)
    manifest.write_json(out, {
        "pulse_count": seq.primitive_pulse_count,
        "norm": final.norm,
        "state": final.to_json_dict(),
    })
    manifest.finalize(out)
    print(f"applied {len(seq)} ops ({seq.primitive_pulse_count} pulses) -> {out}")
    return EXIT_OK


def cmd_parity_scan(args, sys_cfg, noise_cfg) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.points < 8:
        raise UsageError("--points must be >= 8 (fringe fit needs them)")
    shots = _shots_arg(args.shots)
    manifest = Manifest("parity-scan", vars(args), sys_cfg, noise_cfg, args.seed)
    if args.noise:
        state = noisy_generation(args.n, dataclasses.replace(noise_cfg, seed=args.seed),
                                 args.gen_shots, sys_cfg)
    else:
        state = generate_noon(args.n)
    phis = np.linspace(0.0, 2 * np.pi, args.points, endpoint=False)
    scan = parity_scan(state, phis, shots=shots, seed=args.seed)
    fit = fit_parity_fringe(scan, k_init=args.n)
    out = Path(args.out)
    manifest.write_text(out, scan_to_csv(scan, manifest.hash))
    fit_path = Path(args.fit_out) if args.fit_out else out.with_suffix(".fit.json")
    manifest.write_json(fit_path, {
        "A": fit.a, "B": fit.b, "C": fit.c, "k": fit.k,
        "C_P": fit.c_p, "se_k": fit.se_k, "se_C_P": fit.se_c_p,
        "N": args.n, "shots": shots,
    })
    manifest.finalize(out)
    print(f"N={args.n}: k={fit.k:.6f}, C_P={fit.c_p:.6f} -> {out}")
    return EXIT_OK


def cmd_fit_phonon(args, sys_cfg, noise_cfg) -> int:
    signal = signal_from_csv(Path(args.infile).read_text(),
                             omega=args.omega, eta=args.eta)
    manifest = Manifest("fit-phonon", vars(args), sys_cfg, noise_cfg, None)
    fit = fit_phonon_distribution(signal, args.nmax, eta=args.eta,
                                  exponent=args.exponent, omega_init=args.omega)
    out = Path(args.out)
    manifest.write_json(out, {
        "P_n": fit.p_n.tolist(),
        "lambda": fit.lam,
        "omega": fit.omega,
        "A": fit.a_offset,
        "residual_norm": fit.residual_norm,
        "stderr": fit.stderr,
    })
    manifest.finalize(out)
    print(f"fit: sum P_n = {fit.p_n.sum():.4f}, lambda = {fit.lam:.4g} -> {out}")
    return EXIT_OK


def cmd_project_pop(args, sys_cfg, noise_cfg) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    manifest = Manifest("project-pop", vars(args), sys_cfg, noise_cfg, noise_cfg.seed)
    if args.noise:
        state = noisy_generation(args.n, noise_cfg, args.shots, sys_cfg)
    else:
        state = generate_noon(args.n)
    p_n0 = projective_population(state, (args.n, 0), f_op=args.f_op)
    p_0n = projective_population(state, (0, args.n), f_op=args.f_op)
    out = Path(args.out)
    manifest.write_json(out, {"N": args.n, "P_N0": p_n0, "P_0N": p_0n,
                              "f_op": args.f_op})
    manifest.finalize(out)
    print(f"N={args.n}: P_N0={p_n0:.6f}, P_0N={p_0n:.6f} -> {out}")
    return EXIT_OK


def cmd_align_phase(args, sys_cfg, noise_cfg) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    manifest = Manifest("align-phase", vars(args), sys_cfg, noise_cfg, None)
    if args.state:
        state = StateVector.from_json_dict(json.loads(Path(args.state).read_text()))
    else:
        from .hilbert import noon_state

        state = noon_state(space_for_noon(args.n), args.n,
                           parse_angle(args.inject_phi_s))
    theta = parse_angle(args.theta) if args.theta else find_optimal_duration(args.n)
    phis = np.linspace(0.0, 2 * np.pi, args.points, endpoint=False)
    phi_s = align_phase(state, args.n, theta, phis)
    out = Path(args.out)
    manifest.write_json(out, {"N": args.n, "theta_star": theta, "phi_s": phi_s})
    manifest.finalize(out)
    print(f"N={args.n}: theta*={theta / np.pi:.4f}pi, phi_s={phi_s / np.pi:.4f}pi -> {out}")
    return EXIT_OK


def cmd_report(args, sys_cfg, noise_cfg) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    shots = _shots_arg(args.shots)
    manifest = Manifest("report", vars(args), sys_cfg, noise_cfg, args.seed)
    if args.noise:
        state = noisy_generation(args.n, dataclasses.replace(noise_cfg, seed=args.seed),
                                 args.gen_shots, sys_cfg)
    else:
        state = generate_noon(args.n)
    phis = np.linspace(0.0, 2 * np.pi, args.points, endpoint=False)
    fit = fit_parity_fringe(parity_scan(state, phis, shots=shots, seed=args.seed),
                            k_init=args.n)
    p_n0 = projective_population(state, (args.n, 0), f_op=args.f_op)
    p_0n = projective_population(state, (0, args.n), f_op=args.f_op)
    report = MetrologyReport.build(args.n, fit, p_n0, p_0n)
    out = Path(args.out)
    manifest.write_json(out, report.to_json_dict())
    manifest.finalize(out)
    print(f"N={args.n}: F={report.fidelity:.4f}, F_Q={report.f_q:.4f}, "
          f"1/sqrt(F_Q)={report.cramer_rao_bound:.4f} -> {out}")
    return EXIT_OK


def cmd_selftest(args, sys_cfg, noise_cfg) -> int:
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}")
        failures += 0 if ok else 1

    for n in range(1, 10):
        seq = noon_sequence(n)
        check(f"pulse count 5N-2 (N={n})", seq.primitive_pulse_count == 5 * n - 2)
    state = generate_noon(3)
    check("N=3 generation fidelity", noon_fidelity(state, 3) > 1 - 1e-9)
    phis = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    fit = fit_parity_fringe(parity_scan(state, phis), k_init=3)
    check("N=3 parity frequency", abs(fit.k - 3) < 1e-6)
    check("N=3 parity contrast", abs(fit.c_p - 1) < 1e-6)
    from .metrology import NoonDensityModel, qfi_closed, qfi_sld

    rng = np.random.default_rng(7)
    ok = True
    for _ in range(100):
        p1, p2 = rng.uniform(0.05, 0.5, 2)
        coh = rng.uniform(0, 1) * np.sqrt(p1 * p2)
        m = NoonDensityModel(5, p1, p2, coh, phi=rng.uniform(0, 2 * np.pi))
        closed = qfi_closed(5, m.c_p, m.p_sum)
        if closed > 0 and abs(qfi_sld(m, 5) - closed) > 1e-8 * closed:
            ok = False
    check("QFI SLD vs closed form (100 random models)", ok)
    print("selftest:", "OK" if failures == 0 else f"{failures} failures")
    return EXIT_OK if failures == 0 else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="phonoon",
        description="Phonon NOON-state generation, measurement and metrology simulator.",
    )
    p.add_argument("--config", help="TOML or JSON config file (system/noise sections)")
    p.add_argument("--version", action="version", version=f"phonoon {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="compile and run the NOON sequence")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--noise", action="store_true", help="apply quasi-static trap noise")
    g.add_argument("--shots", type=int, default=200, help="shots for noisy runs")
    g.add_argument("--points", type=int, default=64, help="parity points for noisy C_P")
    g.add_argument("--out", default="generate.json")
    g.add_argument("--state-out", default=None, help="write the final state JSON here")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="apply a .seq pulse program")
    r.add_argument("sequence", help="pulse program file")
    r.add_argument("--dx", type=int, default=8)
    r.add_argument("--dy", type=int, default=8)
    r.add_argument("--state-in", default=None, help="start from this state JSON")
    r.add_argument("--out", default="run.json")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("parity-scan", help="parity oscillation scan and fringe fit")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--points", type=int, default=64)
    s.add_argument("--shots", default="exact", help="shots per point or 'exact'")
    s.add_argument("--seed", type=int, default=1234)
    s.add_argument("--noise", action="store_true")
    s.add_argument("--gen-shots", type=int, default=200)
    s.add_argument("--out", default="parity.csv")
    s.add_argument("--fit-out", default=None)
    s.set_defaults(func=cmd_parity_scan)

    f = sub.add_parser("fit-phonon", help="fit a phonon distribution to a signal CSV")
    f.add_argument("--in", dest="infile", required=True)
    f.add_argument("--nmax", type=int, required=True)
    f.add_argument("--eta", type=float, default=PAPER_SYSTEM.eta_y)
    f.add_argument("--exponent", type=float, default=0.7)
    f.add_argument("--omega", type=float, default=None, help="base Rabi guess (rad/s)")
    f.add_argument("--out", default="phonon_fit.json")
    f.set_defaults(func=cmd_fit_phonon)

    pp = sub.add_parser("project-pop", help="staged projective population readout")
    pp.add_argument("--n", type=int, required=True)
    pp.add_argument("--f-op", type=float, default=1.0)
    pp.add_argument("--noise", action="store_true")
    pp.add_argument("--shots", type=int, default=200)
    pp.add_argument("--out", default="populations.json")
    pp.set_defaults(func=cmd_project_pop)

    a = sub.add_parser("align-phase", help="measure the generated-state phase")
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--state", default=None, help="state JSON (default: ideal NOON)")
    a.add_argument("--inject-phi-s", default="0", help="phase for the ideal state")
    a.add_argument("--theta", default=None, help="drive angle (default: optimal)")
    a.add_argument("--points", type=int, default=96)
    a.add_argument("--out", default="phase.json")
    a.set_defaults(func=cmd_align_phase)

    rp = sub.add_parser("report", help="full metrology report (fidelity, QFI, bounds)")
    rp.add_argument("--n", type=int, required=True)
    rp.add_argument("--points", type=int, default=64)
    rp.add_argument("--shots", default="exact")
    rp.add_argument("--seed", type=int, default=1234)
    rp.add_argument("--noise", action="store_true")
    rp.add_argument("--gen-shots", type=int, default=200)
    rp.add_argument("--f-op", type=float, default=1.0)
    rp.add_argument("--out", default="report.json")
    rp.set_defaults(func=cmd_report)

    t = sub.add_parser("selftest", help="quick built-in consistency checks")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sys_cfg, noise_cfg = _load_configs(args.config)
        return args.func(args, sys_cfg, noise_cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
