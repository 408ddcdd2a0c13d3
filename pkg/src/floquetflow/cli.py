"""Command-line front end: ``floquetflow {expand,micromotion,simulate,oracle,curves}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .fastmod import ValidityViolation, fast_expand
from .flow import InternalConsistencyError, expand
from .micromotion import magnus_S
from .modelfile import Model, ModelError, atomic_write, load_model
from .numeric.model import NumericModel, StepTooLarge, evolve_full, propagate_exact
from .numeric.oracle import NonConvergence, dense_flow_oracle
from .symbolic.printing import ExpressionSyntaxError, format_expr, format_physical
from .symbolic.series import Divergent

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE, EXIT_INTERNAL = 0, 2, 3, 4


def _fmt(x: float) -> str:
    return format(float(x), ".15g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _mat(M) -> list:
    M = np.asarray(M)
    return [[[_fmt(z.real), _fmt(z.imag)] for z in row] for row in M]


def _series_report(series, physical: bool = True) -> dict:
    """``{order: {harmonic: {label: expression}}}`` plus the hbar/omega form."""
    out, phys = {}, {}
    for i, op in series.items():
        out[str(i)], phys[str(i)] = {}, {}
        for n in op.harmonics():
            row = op.by_label(n)
            if row:
                out[str(i)][str(n)] = {lab: format_expr(c) for lab, c in row.items()}
                phys[str(i)][str(n)] = {lab: format_physical(c, i) for lab, c in row.items()}
    return {"orders": out, "physical": phys} if physical else {"orders": out}


def _task(model: Model, args, key, default=None):
    v = getattr(args, key, None)
    if v is not None:
        return v
    return model.task.get(key, default)


def _outdir(model: Model, args) -> Path:
    return Path(args.out or model.output.get("dir", "."))


def _numeric_model(model: Model, args) -> NumericModel:
    return NumericModel(model.fourier, model.numeric_envelopes(), model.numeric_params(args.seed),
                        omega=float(_task(model, args, "omega", 1.0)), theta=float(_task(model, args, "theta", 0.0)))


def _need_fourier(model: Model, what: str):
    if model.fourier is None:
        raise ModelError(f"'{what}' needs a 'fourier' block; this model only has a fast-modulation block")


def cmd_expand(args) -> int:
    model = load_model(args.model)
    out = _outdir(model, args)
    if model.fourier is None:
        order = int(_task(model, args, "order", 1))
        res = fast_expand(model.fast, order=order)
        labels = model.algebra.labels

        def rows(d):
            return {str(p): {lab: format_expr(c) for lab, c in zip(labels, v) if c} for p, v in sorted(d.items())}

        report = {"model": model.name, "mode": "fast", "omega_ratio": str(res.rho),
                  "h_eff": {"0": rows(res.heff0), "1": rows(res.heff1)}, "diagnostics": res.diagnostics}
    else:
        order = int(_task(model, args, "order", 2))
        engine = _task(model, args, "engine", "toda")
        steps = _task(model, args, "steps", None)
        res = expand(model.fourier, order, engine=engine, steps=steps)
        report = {"model": model.name, "mode": "slow", "engine": engine, "order": order,
                  "h_eff": _series_report(res.h_eff), "diagnostics": res.diagnostics}
    path = out / f"{model.name}_expand.json"
    atomic_write(path, _json_text(report))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_micromotion(args) -> int:
    model = load_model(args.model)
    _need_fourier(model, "micromotion")
    order = int(_task(model, args, "order", 2))
    engine = _task(model, args, "engine", "toda")
    if engine not in ("toda", "vmm"):
        raise ModelError("micromotion needs a continuous engine (toda or vmm)", "--engine")
    res = expand(model.fourier, order, engine=engine)
    S = magnus_S(res.flow_history, order)
    report = {"model": model.name, "engine": engine, "order": order, "S": _series_report(S.orders)}
    path = _outdir(model, args) / f"{model.name}_micromotion.json"
    atomic_write(path, _json_text(report))
    print(f"wrote {path}")
    return EXIT_OK


def _traj_rows(traj):
    for t, psi in zip(traj.t, traj.states):
        yield [t, traj.omega * t] + [x for z in psi for x in (z.real, z.imag)] + list(np.abs(psi) ** 2)


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    _need_fourier(model, "simulate")
    nm = _numeric_model(model, args)
    sim = dict(model.task.get("simulate", {}))
    t0, t1 = float(sim.get("t0", 0.0)), float(sim.get("t1", 10.0))
    psi0 = np.array([complex(*z) if isinstance(z, list) else complex(z) for z in sim.get("psi0", [1] + [0] * (nm.dim - 1))])
    if psi0.shape != (nm.dim,):
        raise ModelError(f"psi0 must have {nm.dim} entries", "task.simulate.psi0")
    psi0 = psi0 / np.linalg.norm(psi0)
    order = int(_task(model, args, "order", 2))
    engine = _task(model, args, "engine", "toda")
    dt = sim.get("dt")
    exact = propagate_exact(nm, t0, t1, psi0, dt)
    res = expand(model.fourier, order, engine=engine, steps=_task(model, args, "steps", None))
    S = magnus_S(res.flow_history, order) if engine in ("toda", "vmm") else None
    eff = evolve_full(nm, res, S, order, t0, t1, psi0, dt)
    d = nm.dim
    header = ["t", "omega_t"] + [f"{p}_{k}" for k in range(d) for p in ("re", "im")] + [f"P_{k}" for k in range(d)]
    out = _outdir(model, args)
    for tag, tr in (("exact", exact), (f"effective_N{order}", eff)):
        path = out / f"{model.name}_{tag}.csv"
        atomic_write(path, _csv_text(header, _traj_rows(tr)))
        print(f"wrote {path}")
    dev = float(np.max(np.abs(exact.populations() - eff.populations())))
    print(f"max population deviation {dev:.3e}; exact-run norm drift {exact.norm_drift():.1e}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    model = load_model(args.model)
    _need_fourier(model, "oracle")
    nm = _numeric_model(model, args)
    if not nm.is_static:
        raise ModelError("the dense oracle needs constant envelopes", "envelopes")
    order = int(_task(model, args, "order", 2))
    engine = _task(model, args, "engine", "toda")
    generator = engine if engine in ("toda", "vmm") else "toda"
    settings = dict(model.task.get("oracle", {}))
    mats = {n: np.einsum("l,lij->ij", nm.coefficients(nm.h, n, 0.0), nm.rep) for n in nm.h.harmonics()}
    o = dense_flow_oracle(mats, nm.omega, generator, K=settings.get("K"), s_max=settings.get("s_max"),
                          doubling_check=bool(settings.get("doubling_check", False)))
    res = expand(model.fourier, order, engine=engine, steps=_task(model, args, "steps", None))
    sym = sum(nm.omega ** (-i) * nm.op_matrix(op, 0.0, phase=0.0) for i, op in res.h_eff.items() if i <= order)
    report = {"model": model.name, "omega": _fmt(nm.omega), "generator": generator, "K": o.K,
              "residual": _fmt(o.residual), "s_final": _fmt(o.s_final),
              "oracle_h_eff": _mat(o.h_eff), "symbolic_h_eff": _mat(sym), "order": order,
              "difference_norm": _fmt(np.linalg.norm(o.h_eff - sym)),
              "diagnostics": {k: _fmt(v) for k, v in o.diagnostics.items()}}
    path = _outdir(model, args) / f"{model.name}_oracle.json"
    atomic_write(path, _json_text(report))
    print(f"wrote {path}; |oracle - series| = {report['difference_norm']}")
    return EXIT_OK


def cmd_curves(args) -> int:
    from .numeric.transition import CURVES, transition_curves

    res = transition_curves(omega=args.omega if args.omega is not None else 1.0,
                         theta=args.theta if args.theta is not None else 0.0,
                         engine=args.engine or "toda")
    out = Path(args.out or ".")
    rows = zip(res.phase, *(res.curves[c] for c in CURVES))
    atomic_write(out / "transition.csv", _csv_text(["omega_t"] + list(CURVES), rows))
    summary = {"max_deviation": {k: _fmt(v) for k, v in res.deviations.items()},
               "period_error": {k: _fmt(v) for k, v in res.period_errors.items()},
               "ordering_holds": res.ordering_holds(),
               "parameters": {k: (_fmt(v) if isinstance(v, float) else v) for k, v in res.meta.items()}}
    atomic_write(out / "transition_summary.json", _json_text(summary))
    print(f"wrote {out / 'transition.csv'}")
    for k, v in res.deviations.items():
        print(f"  {k:15s} max |dP| = {v:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="floquetflow", description="High-frequency expansions of amplitude-modulated drives.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        if model:
            sp.add_argument("model", help="model JSON file or bundled model name")
        sp.add_argument("--order", type=int)
        sp.add_argument("--engine", choices=["toda", "vmm", "discrete"])
        sp.add_argument("--steps", type=int)
        sp.add_argument("--omega", type=float)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)

    for name, fn, hlp in (("expand", cmd_expand, "effective Hamiltonian series"),
                          ("micromotion", cmd_micromotion, "micromotion exponent series"),
                          ("simulate", cmd_simulate, "exact and effective trajectories as CSV"),
                          ("oracle", cmd_oracle, "dense-flow check of the series at one frequency")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.set_defaults(func=fn)
    sp = sub.add_parser("curves", help="two-level transition probability under five descriptions")
    common(sp, model=False)
    sp.set_defaults(func=cmd_curves)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelError, ExpressionSyntaxError, ValidityViolation, StepTooLarge, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (InternalConsistencyError, Divergent) as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
